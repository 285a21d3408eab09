"""Bundled example systems and graphs.

Each entry knows how to build its system (if any), its vertical graph and
its augmented graph at a given depth, plus default parameters.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable

from .config import system_from_config
from .errors import InvalidParameter
from .graph import AugmentedGraph, augment_ai_b, augment_ai_infty, load_explicit
from .ifs import RectanglePartition, triangular_steps
from .words import build_full_tree, quotient_by_evaluation

SQRT3_HALF = "√3/2"


def sg2_config() -> dict:
    return {
        "name": "sg2",
        "arithmetic": {"mode": "quadratic", "d": 3},
        "maps": [{"ratio": "1/2", "translation": ["0", "0"]},
                 {"ratio": "1/2", "translation": ["1/2", "0"]},
                 {"ratio": "1/2", "translation": ["1/4", "√3/4"]}],
        "region": [["0", "0"], ["1", "0"], ["1/2", SQRT3_HALF]],
        "pcf": True,
    }


def simplex_config(k: int) -> dict:
    """Gasket on the standard k-simplex spanned by the unit vectors of R^(k+1)."""
    dim = k + 1
    verts = [[1 if i == j else 0 for i in range(dim)] for j in range(dim)]
    return {
        "name": f"sg-d{k}",
        "arithmetic": {"mode": "rational"},
        "maps": [{"ratio": "1/2", "translation": [str(Fraction(c, 2)) for c in v]} for v in verts],
        "region": [[str(c) for c in v] for v in verts],
        "pcf": True,
    }


def hata_config() -> dict:
    # S1(z) = c conj(z), S2(z) = (1-|c|^2) conj(z) + |c|^2 with c = 1/2 + 3i/10, as real 2x2 maps
    return {
        "name": "hata",
        "arithmetic": {"mode": "rational"},
        "maps": [{"linear": [["1/2", "3/10"], ["3/10", "-1/2"]], "translation": ["0", "0"]},
                 {"linear": [["33/50", "0"], ["0", "-33/50"]], "translation": ["17/50", "0"]}],
        # convex hull of 0, 1, c and four points of K; invariant under both maps
        "region": [["0", "0"], ["65237/125000", "-99/500"], ["67/100", "-99/500"], ["1", "0"],
                   ["1/2", "3/10"], ["689/2500", "3/10"], ["50387/250000", "319461/1250000"]],
        "pcf": True,
    }


def golden_config() -> dict:
    rho = "(-1+√5)/2"
    return {
        "name": "bernoulli-golden",
        "arithmetic": {"mode": "quadratic", "d": 5},
        "cell_model": "index",
        "maps": [{"ratio": rho, "translation": ["0"]},
                 {"ratio": rho, "translation": [rho]}],
        "region": [["0"], ["(1+√5)/2"]],
    }


def offset_level(ell: int) -> int:
    return 1 + ell * (ell + 7) // 2


def offset_eta(L: int) -> tuple[Fraction, Fraction]:
    """Partial sum of eta through index L and a bound on the tail."""
    s = sum(Fraction(1, 4 ** offset_level(l)) + Fraction(1, 4 ** (offset_level(l) + 1)) for l in range(L + 1))
    return s, Fraction(2, 4 ** offset_level(L + 1))


def offset_config(L: int = 6) -> dict:
    eta, tail = offset_eta(L)
    pts = [(0, 0), (1, 0), (3, 0), (eta, 2), (0, 3), (3, 3)]
    maps = []
    for j, (px, py) in enumerate(pts, start=1):
        m = {"ratio": "1/4", "translation": [str(Fraction(px) / 4), str(Fraction(py) / 4)]}
        if j == 4:
            m["translation_error"] = [str(tail / 4), "0"]
        maps.append(m)
    return {
        "name": "offset-squares",
        "arithmetic": {"mode": "rational"},
        "cell_model": "index",
        "maps": maps,
        "region": [["0", "0"], ["1", "0"], ["1", "1"], ["0", "1"]],
    }


def offset_words(ell: int) -> dict:
    """The designated words x, y (length n_ell) and u = x23, v = y56."""
    x = (5,)
    for k in range(2, ell + 2):
        x += (2, 2) + (1,) * k
    n = offset_level(ell)
    y = (4,) + (5,) * (n - 1)
    assert len(x) == n
    return {"x": x, "y": y, "u": x + (2, 3), "v": y + (5, 6), "n": n}


def aniso_words(ell: int) -> dict:
    """x = 1^n and y = 2 12 112 ... 1^(ell-1)2 with n = ell(ell+1)/2, and their designated descendants."""
    n = ell * (ell + 1) // 2
    y = ()
    for k in range(ell):
        y += (1,) * k + (2,)
    x = (1,) * n
    return {"x": x, "y": y, "u": x + (1,) * ell, "v": y + (1,) * ell, "n": n}


def aniso_partition() -> RectanglePartition:
    return RectanglePartition(triangular_steps, name="aniso-binary")


# -- explicit graphs ------------------------------------------------------------

def ladder_fans_graph(depth: int) -> AugmentedGraph:
    """Two ladder fans: level n has l1..ln and r1..rn; each side a horizontal path."""
    levels = [["ϑ"]]
    parents, horiz = {}, []
    for n in range(1, depth + 1):
        row = []
        for side in "lr":
            names = [f"{side}{n}.{i}" for i in range(1, n + 1)]
            row.extend(names)
            for i in range(1, n + 1):
                if n == 1:
                    parents[names[0]] = ["ϑ"]
                else:
                    parents[f"{side}{n}.{i}"] = [f"{side}{n - 1}.{min(i, n - 1)}"]
            horiz.extend(zip(names, names[1:]))
        levels.append(row)
    if depth >= 1:
        horiz.append(("l1.1", "r1.1"))
    return load_explicit({"levels": levels, "parents": parents, "horizontal": horiz})


def branching_chains_graph(depth: int) -> AugmentedGraph:
    """Chains x_i and a_i with x_i ~ a_i; a_(n+1) also starts a lone branch b_n."""
    levels = [["ϑ"]]
    parents, horiz = {}, []
    for n in range(1, depth + 1):
        row = [f"x{n}", f"a{n}"]
        parents[f"x{n}"] = ["ϑ" if n == 1 else f"x{n - 1}"]
        parents[f"a{n}"] = ["ϑ" if n == 1 else f"a{n - 1}"]
        horiz.append((f"x{n}", f"a{n}"))
        for j in range(1, n - 1):
            name = f"b{j}@{n}"
            row.append(name)
            parents[name] = [f"a{j + 1}" if n == j + 2 else f"b{j}@{n - 1}"]
        levels.append(row)
    return load_explicit({"levels": levels, "parents": parents, "horizontal": horiz})


# -- registry ------------------------------------------------------------------

@dataclass(frozen=True)
class Example:
    name: str
    description: str
    kind: str                         # "system", "partition" or "explicit"
    default_depth: int
    graph: str = "ai-infty"
    defaults: dict = field(default_factory=dict)
    seed: int = 0
    config: Callable | None = None

    def system(self):
        return _system(self.name)

    def vertical(self, depth: int):
        if self.kind == "explicit":
            return self.augmented(depth).base
        sys = self.system()
        tree = build_full_tree(sys.alphabet, depth)
        if self.name == "bernoulli-golden":
            return quotient_by_evaluation(tree, lambda w: sys.cell(w).map((0,))[0])
        return tree

    def augmented(self, depth: int, graph: str | None = None, b=None, gamma=None) -> AugmentedGraph:
        graph = graph or self.graph
        if self.kind == "explicit":
            if graph not in ("explicit", self.graph):
                raise InvalidParameter(f"{self.name} is an explicit graph")
            return {"ladder-fans": ladder_fans_graph, "branching-chains": branching_chains_graph}[self.name](depth)
        sys = self.system()
        vg = self.vertical(depth)
        if graph == "ai-infty":
            return augment_ai_infty(sys, vg)
        if graph == "ai-b":
            b = b if b is not None else self.defaults.get("b", "log(2)")
            gamma = gamma if gamma is not None else self.defaults.get("gamma", 1)
            return augment_ai_b(sys, vg, b, gamma)
        raise InvalidParameter(f"graph kind {graph!r} needs an explicit description")


def _sg_dk(name: str):
    m = re.fullmatch(r"sg-d(\d+)", name)
    return int(m.group(1)) if m else None


@lru_cache(maxsize=None)
def _system(name: str):
    if name == "sg2":
        return system_from_config(sg2_config())
    if name == "hata":
        return system_from_config(hata_config())
    if name == "bernoulli-golden":
        return system_from_config(golden_config())
    if name == "offset-squares":
        return system_from_config(offset_config())
    if name == "aniso-binary":
        return aniso_partition()
    k = _sg_dk(name)
    if k is not None:
        return system_from_config(simplex_config(k))
    raise InvalidParameter(f"no system for {name!r}")


EXAMPLES = {
    "sg2": Example("sg2", "Sierpinski gasket in the plane, exact over Q(sqrt 3)", "system", 6,
                   defaults={"a": 0.4, "b": "log(2)", "gamma": 1}, config=sg2_config),
    "sg-d3": Example("sg-d3", "gasket on the 3-simplex in R^4 (pattern sg-d<k>)", "system", 4,
                     defaults={"a": 0.4, "b": "log(2)", "gamma": 1}, config=lambda: simplex_config(3)),
    "hata": Example("hata", "Hata tree with c = 1/2 + 3i/10", "system", 7,
                    defaults={"a": 0.2, "b": "log(2)", "gamma": 1}, config=hata_config),
    "bernoulli-golden": Example("bernoulli-golden", "golden Bernoulli convolution, quotient vertical graph",
                                "system", 8, defaults={"a": 0.2, "b": "log(2)", "gamma": 1}, config=golden_config),
    "aniso-binary": Example("aniso-binary", "anisotropic binary partition of the unit square", "partition", 10,
                            defaults={"a": 0.2, "b": "log(2)", "gamma": 1}),
    "offset-squares": Example("offset-squares", "six squares of side 1/4 with an irrational offset", "system", 3,
                     defaults={"a": 0.2, "b": "log(4)", "gamma": 1}, config=offset_config),
    "ladder-fans": Example("ladder-fans", "two ladder fans: expansive but never departing", "explicit", 7, graph="explicit"),
    "branching-chains": Example("branching-chains", "two chains with side branches", "explicit", 7, graph="explicit"),
}


def get_example(name: str) -> Example:
    if name in EXAMPLES:
        return EXAMPLES[name]
    k = _sg_dk(name)
    if k is not None:
        if k < 1:
            raise InvalidParameter("sg-d<k> needs k >= 1")
        return Example(name, f"gasket on the {k}-simplex", "system", 4,
                       defaults={"a": 0.4, "b": "log(2)", "gamma": 1}, config=lambda: simplex_config(k))
    raise InvalidParameter(f"unknown example {name!r}; known: {', '.join(EXAMPLES)}")
