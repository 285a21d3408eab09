"""Command line entry point: build, check, boundary, resistance, export, examples.

Reports embed the fully resolved run configuration and its hash; files are
written atomically under ``--out`` and named by that hash.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from . import __version__
from .boundary import (boundary_sample, covering_chain_holds, covering_numbers, doubling_scan, holder_scan,
                       meet_product_gap, proxy_metric, shadow_sandwich, ahlfors_scan)
from .config import config_hash, load_config, system_from_config
from .errors import AugIndexError, InvalidInput, InvalidParameter
from .graph import parse_rate, augment_ai_b, augment_ai_infty, dump_graph, load_explicit, to_dot
from .hyperbolicity import (CriterionReport, check_departing, check_expansive, check_separation,
                            degree_stats, derived_departing_facts, four_point_delta,
                            horizontal_geodesic_scan)
from .registry import EXAMPLES, get_example
from .resistance import (HarmonicStructure, build_network, effective_resistance, harmonic_extension,
                         disjoint_cell_scan, standard_sg, theta_resistance_scan)
from .words import build_full_tree

COMMANDS = ("build", "check", "boundary", "resistance", "export", "examples")
GRAPH_KINDS = ("ai-infty", "ai-b", "explicit")


@dataclass
class RunConfig:
    command: str
    system: str | None = None
    graph: str | None = None
    depth: int | None = None
    a: float | None = None
    b: str | None = None
    gamma: float | None = None
    m_max: int = 2
    k_max: int = 2
    sample: int = 50
    seed: int = 0
    out: str | None = None
    format: str = "text"
    ray_depth: int = 8
    source: dict = field(default_factory=dict, repr=False)

    def validate(self):
        if self.command != "examples" and not self.system:
            raise InvalidParameter("--system is required")
        if self.graph is not None and self.graph not in GRAPH_KINDS:
            raise InvalidParameter(f"--graph must be one of {', '.join(GRAPH_KINDS)}")
        if self.depth is not None and self.depth < 1 and self.command != "resistance":
            raise InvalidParameter("--depth must be >= 1")
        if self.depth is not None and self.depth < 0:
            raise InvalidParameter("--depth must be >= 0")
        if self.a is not None and self.a <= 0:
            raise InvalidParameter("--a must be > 0")
        if self.gamma is not None and self.gamma <= 0:
            raise InvalidParameter("--gamma must be > 0")
        if self.b is not None:
            if parse_rate(self.b)[0] <= 0:
                raise InvalidParameter("--b must be > 0")
        if self.m_max < 1 or self.k_max < 1 or self.sample < 1:
            raise InvalidParameter("--m-max, --k-max and --sample must be >= 1")

    def resolved(self) -> dict:
        d = asdict(self)
        d.pop("out")
        d.pop("format")
        d.pop("source")
        d["system_config"] = self.source
        d["version"] = __version__
        return d

    @property
    def key(self) -> str:
        return config_hash(self.resolved())


# -- resolving systems and graphs ---------------------------------------------------

class Target:
    """The system (if any) and graph builder behind ``--system``."""

    def __init__(self, name: str, system=None, example=None, explicit=None, cfg=None):
        self.name = name
        self.system = system
        self.example = example
        self.explicit = explicit
        self.cfg = cfg or {}

    @property
    def defaults(self) -> dict:
        d = dict(self.example.defaults) if self.example else {}
        d.update(self.cfg.get("params", {}) or {})
        return d

    @property
    def default_depth(self) -> int:
        return self.example.default_depth if self.example else int(self.cfg.get("params", {}).get("depth", 5))

    @property
    def default_graph(self) -> str:
        if self.explicit is not None:
            return "explicit"
        if self.example:
            return self.example.graph
        g = self.cfg.get("graph")
        return g if isinstance(g, str) else "ai-infty"

    def graph(self, kind: str, depth: int, b, gamma):
        if kind == "explicit":
            if self.example and self.example.kind == "explicit":
                return self.example.augmented(depth)
            if self.explicit is None:
                raise InvalidParameter(f"{self.name} has no explicit graph description")
            g = load_explicit(self.explicit)
            return g.truncate(depth) if depth < g.depth else g
        if self.system is None:
            raise InvalidParameter(f"{self.name} has no system; use --graph explicit")
        if self.example:
            return self.example.augmented(depth, kind, b, gamma)
        tree = build_full_tree(self.system.alphabet, depth)
        if kind == "ai-infty":
            return augment_ai_infty(self.system, tree)
        return augment_ai_b(self.system, tree, b, gamma)

    def harmonic(self) -> HarmonicStructure:
        h = self.cfg.get("harmonic")
        if h:
            return HarmonicStructure.make(h["H"], h["s"])
        if self.name == "sg2":
            return standard_sg()
        raise InvalidParameter(f"no harmonic structure known for {self.name}; add a 'harmonic' entry")


def resolve_target(name_or_path: str) -> tuple[Target, dict]:
    if os.path.exists(name_or_path):
        cfg = load_config(name_or_path)
        source = cfg
        if "maps" in cfg:
            body = {k: v for k, v in cfg.items() if k != "harmonic"}
            return Target(cfg.get("name", name_or_path), system_from_config(body), cfg=cfg), source
        g = cfg.get("graph")
        if isinstance(g, dict):
            return Target(cfg.get("name", name_or_path), explicit=g, cfg=cfg), source
        raise InvalidInput(f"{name_or_path}: needs 'maps' or an explicit 'graph' mapping")
    ex = get_example(name_or_path)
    source = {"example": ex.name}
    if ex.config is not None:
        source["config"] = ex.config()
    return Target(ex.name, ex.system() if ex.kind != "explicit" else None, ex), source


# -- report assembly ----------------------------------------------------------------

def _clean(v):
    if isinstance(v, float):
        if math.isinf(v):
            return "inf"
        return float(f"{v:.10g}")
    if isinstance(v, (np.floating,)):
        return _clean(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, tuple) and all(isinstance(t, int) for t in v):
        return "".join(map(str, v)) if all(t < 10 for t in v) else ".".join(map(str, v))
    if isinstance(v, (list, tuple)):
        return [_clean(t) for t in v]
    if isinstance(v, dict):
        return {str(_clean(k)) if not isinstance(k, str) else k: _clean(t) for k, t in v.items()}
    return v


class Report:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.sections: list[tuple[str, dict]] = []

    def add(self, name: str, payload):
        if isinstance(payload, CriterionReport):
            payload = {"verdict": payload.verdict, "constants": payload.constants,
                       "witnesses": payload.witnesses, "rows": payload.rows, "notes": payload.notes}
        self.sections.append((name, _clean(payload)))

    def text(self) -> str:
        lines = [f"config_hash: {self.cfg.key}",
                 "config: " + json.dumps(_clean(self.cfg.resolved()), sort_keys=True, ensure_ascii=False)]
        for name, body in self.sections:
            lines.append(f"[{name}]")
            for k, v in body.items():
                if isinstance(v, list) and v and isinstance(v[0], dict):
                    for item in v:
                        lines.append(f"  {k}: " + json.dumps(item, sort_keys=True, ensure_ascii=False))
                else:
                    lines.append(f"  {k}: " + json.dumps(v, sort_keys=True, ensure_ascii=False))
        return "\n".join(lines) + "\n"

    def csv(self) -> str:
        import csv
        import io
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["config_hash", "section", "item", "key", "value"])
        key = self.cfg.key
        for name, body in self.sections:
            for k, v in body.items():
                if isinstance(v, list) and v and isinstance(v[0], dict):
                    for i, item in enumerate(v):
                        for kk, vv in item.items():
                            w.writerow([key, name, f"{k}[{i}]", kk, json.dumps(vv, ensure_ascii=False)])
                else:
                    w.writerow([key, name, "", k, json.dumps(v, sort_keys=True, ensure_ascii=False)])
        return buf.getvalue()


def atomic_write(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(cfg: RunConfig, name: str, text: str, ext: str, stdout) -> str | None:
    if cfg.out is None:
        stdout.write(text)
        return None
    path = os.path.join(cfg.out, f"{name}-{cfg.key}.{ext}")
    atomic_write(path, text)
    stdout.write(path + "\n")
    return path


# -- commands ----------------------------------------------------------------------

def fill_defaults(cfg: RunConfig, target: Target) -> None:
    """Replace unset parameters by the target's defaults so reports carry resolved values."""
    d = target.defaults
    if cfg.command == "resistance":
        cfg.depth = 3 if cfg.depth is None else cfg.depth
        cfg.a = float(d.get("a", 0.4)) if cfg.a is None else cfg.a
        return
    cfg.depth = target.default_depth if cfg.depth is None else cfg.depth
    cfg.graph = cfg.graph or target.default_graph
    cfg.a = float(d.get("a", 0.2)) if cfg.a is None else cfg.a
    cfg.b = str(d.get("b", "log(2)")) if cfg.b is None else cfg.b
    cfg.gamma = float(d.get("gamma", 1)) if cfg.gamma is None else cfg.gamma


def _params(cfg: RunConfig, target: Target):
    return cfg.depth, cfg.graph, cfg.a, cfg.b, cfg.gamma


def cmd_build(cfg, target, stdout, stderr):
    depth, kind, a, b, gamma = _params(cfg, target)
    if cfg.out is not None:
        path = os.path.join(cfg.out, f"graph-{cfg.key}.txt")
        stamp = path + ".sha256"
        if os.path.exists(path) and os.path.exists(stamp):
            with open(path, encoding="utf-8") as fh:
                body = fh.read()
            with open(stamp, encoding="utf-8") as fh:
                want = fh.read().strip()
            if hashlib.sha256(body.encode("utf-8")).hexdigest() == want:
                stderr.write("cache: hit\n")
                stdout.write(path + "\n")
                return 0
    g = target.graph(kind, depth, b, gamma)
    body = to_dot(g) if cfg.format == "dot" else dump_graph(g)
    if cfg.out is None:
        stdout.write(body)
        return 0
    atomic_write(path, body)
    atomic_write(stamp, hashlib.sha256(body.encode("utf-8")).hexdigest() + "\n")
    stderr.write("cache: miss\n")
    stdout.write(path + "\n")
    return 0


def _check_sections(rep: Report, cfg, target, g, depth, a, b):
    rep.add("expansive", check_expansive(g, depth))
    for m in range(1, cfg.m_max + 1):
        for k in range(1, cfg.k_max + 1):
            if depth < m + 1:
                continue
            rep.add(f"departing m={m} k={k}", check_departing(g, m, k, depth, max_witnesses=3))
    rep.add("facts", {"L": derived_departing_facts(1, 1).L, "D0": derived_departing_facts(1, 1).D0,
                      "counterexamples": len(derived_departing_facts(1, 1, g, min(depth, 7)).counterexamples)})
    scan = horizontal_geodesic_scan(g, depth)
    rep.add("horizontal geodesics", scan)
    rep.add("degree", degree_stats(g))
    rep.add("four-point delta", four_point_delta(g, sample_size=cfg.sample * 100, depth=min(depth, 5),
                                                 seed=cfg.seed, a=a))
    if target.system is not None:
        for which in ("S_b", "S_b'", "S_b''", "H"):
            try:
                rep.add(f"separation {which}", check_separation(target.system, g, which, {"b": b},
                                                                min(depth, 5)))
            except AugIndexError as exc:
                rep.add(f"separation {which}", {"skipped": f"{exc.code}: {exc}"})


def cmd_check(cfg, target, stdout, stderr):
    depth, kind, a, b, gamma = _params(cfg, target)
    g = target.graph(kind, depth, b, gamma)
    rep = Report(cfg)
    _check_sections(rep, cfg, target, g, depth, a, b)
    return _finish(cfg, rep, "check", stdout)


def cmd_boundary(cfg, target, stdout, stderr):
    depth, kind, a, b, gamma = _params(cfg, target)
    g = target.graph(kind, depth, b, gamma)
    rep = Report(cfg)
    facts = derived_departing_facts(1, 1)
    rays = boundary_sample(g, depth)
    rep.add("gromov", dict(meet_product_gap(g, rays, 1), bound=facts.D0))
    M = proxy_metric(g, rays, a)
    rep.add("theta", {"a": a, "rays": len(rays), "max": float(M.max()),
                      "min_offdiag": float(M[M > 0].min()) if (M > 0).any() else 0.0})
    level = max(1, math.ceil(depth / 2) - 1)
    sh = shadow_sandwich(g, level, 1, a, depth, rays)
    rep.add("shadows", {k: sh[k] for k in ("level", "k", "C_inner", "C_outer", "gamma")})
    rows = []
    for j in range(0, 5):
        r = math.exp(-a * j)
        cn = covering_numbers(M, r)
        rows.append({"r": r, "cover": cn.cover, "packing": cn.packing, "separating": cn.separating,
                     "exact": cn.exact, "chain": covering_chain_holds(M, r)})
    rep.add("covering", {"rows": rows})
    fine = boundary_sample(g, depth, max(1, depth - 1))
    rep.add("doubling", doubling_scan(proxy_metric(g, fine, a), [math.exp(-a * j) for j in range(2, 7)]))
    if target.system is not None and target.system.pcf is not None and g.base.is_tree():
        k = 1
        pairs = [(rays[i], rays[j]) for i in range(min(len(rays), 12)) for j in range(i + 1, min(len(rays), 12))]
        hs = holder_scan(target.system, pairs, a, parse_rate(b)[0], k, facts.D0, g)
        rep.add("holder", {k2: hs[k2] for k2 in ("band_min", "band_max", "skipped", "a", "b")})
        ratios = [m.ratio for m in target.system.maps]
        rep.add("ahlfors", ahlfors_scan(g, ratios, a, [1, 2, 3], depth))
    return _finish(cfg, rep, "boundary", stdout)


def cmd_resistance(cfg, target, stdout, stderr):
    if target.system is None:
        raise InvalidParameter("resistance needs a p.c.f. system")
    hs = target.harmonic()
    n, a = cfg.depth, cfg.a
    sysm = target.system
    rep = Report(cfg)
    nets = [build_network(sysm, hs, m) for m in range(n + 1)]
    rep.add("networks", {"rows": [{"level": net.level, "vertices": net.n_vertices, "edges": net.n_edges}
                                  for net in nets]})
    rep.add("corner resistance", {"rows": [{"level": net.level, "R": effective_resistance(net, [0], [1])}
                                           for net in nets]})
    gaps = []
    for m in range(n):
        for p in range(len(hs.H)):
            data = [1 if i == p else 0 for i in range(nets[m].n_vertices)]
            ev = harmonic_extension(nets[m], nets[m + 1], data)
            gaps.append({"level": m, "basis": p, "energy": ev.value, "gap": ev.gap})
    rep.add("regularity", {"rows": gaps})
    lem = disjoint_cell_scan(sysm, hs, min(n, 3), start=2)
    rep.add("disjoint cells", {"per_level": lem["per_level"], "gamma_prime": lem["gamma_prime"]})
    g = target.graph("ai-infty", cfg.ray_depth, None, None)
    if not (check_expansive(g).holds and check_departing(g, 1, 1).holds):
        raise InvalidParameter("comparison needs an expansive (m,1)-departing graph")
    band = theta_resistance_scan(sysm, hs, a, g, n=min(n, 3), sample=cfg.sample, seed=cfg.seed)
    rep.add("theta vs resistance", {k: band[k] for k in ("lo", "hi", "spread", "exponent", "depth",
                                                          "kappa_budget", "skipped_open")})
    return _finish(cfg, rep, "resistance", stdout)


def cmd_export(cfg, target, stdout, stderr):
    depth, kind, a, b, gamma = _params(cfg, target)
    g = target.graph(kind, depth, b, gamma)
    if cfg.format == "dot":
        emit(cfg, "graph", to_dot(g), "dot", stdout)
        return 0
    if cfg.format == "csv":
        import csv
        import io
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["config_hash", "kind", "level", "u", "v"])
        for n, level in enumerate(g.levels):
            for v in level:
                for c in g.base.children[v]:
                    w.writerow([cfg.key, "vertical", n, g.label(v), g.label(c)])
        for v, u in g.horizontal_edges():
            w.writerow([cfg.key, "horizontal", g.base.level_of[v], g.label(v), g.label(u)])
        emit(cfg, "edges", buf.getvalue(), "csv", stdout)
        return 0
    emit(cfg, "graph", dump_graph(g), "txt", stdout)
    return 0


def cmd_examples(cfg, target, stdout, stderr):
    for name, ex in EXAMPLES.items():
        stdout.write(f"{name}\t{ex.kind}\tdepth {ex.default_depth}\t{ex.description}\n")
    return 0


def _finish(cfg, rep: Report, name: str, stdout) -> int:
    if cfg.format == "csv":
        emit(cfg, name, rep.csv(), "csv", stdout)
    elif cfg.format == "text":
        emit(cfg, name, rep.text(), "txt", stdout)
    else:
        raise InvalidParameter(f"--format {cfg.format} does not apply to {name}")
    return 0


HANDLERS = {"build": cmd_build, "check": cmd_check, "boundary": cmd_boundary,
            "resistance": cmd_resistance, "export": cmd_export, "examples": cmd_examples}


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="augindex", description="Augmented index graphs of self-similar sets")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--system", help="bundled example name or path to a YAML configuration")
    p.add_argument("--graph", choices=GRAPH_KINDS)
    p.add_argument("--depth", type=int)
    p.add_argument("--a", type=float)
    p.add_argument("--b", help="rate b, a number or log(r)")
    p.add_argument("--gamma", type=float)
    p.add_argument("--m-max", type=int, default=2)
    p.add_argument("--k-max", type=int, default=2)
    p.add_argument("--sample", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ray-depth", type=int, default=8, help="prefix depth for the resistance comparison")
    p.add_argument("--out", help="directory for reports and graphs (default: stdout)")
    p.add_argument("--format", choices=("text", "csv", "dot"), default="text")
    return p


def error_block(exc: Exception) -> str:
    code = getattr(exc, "code", "internal-error")
    details = _clean(getattr(exc, "details", {}) or {})
    return json.dumps({"error": {"code": code, "message": str(exc), "details": details}},
                      sort_keys=True, ensure_ascii=False, default=str) + "\n"


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = make_parser().parse_args(argv)
    cfg = RunConfig(args.command, args.system, args.graph, args.depth, args.a, args.b, args.gamma,
                    args.m_max, args.k_max, args.sample, args.seed, args.out, args.format, args.ray_depth)
    try:
        cfg.validate()
        target = None
        if cfg.command != "examples":
            target, cfg.source = resolve_target(cfg.system)
            fill_defaults(cfg, target)
        return HANDLERS[cfg.command](cfg, target, stdout, stderr)
    except AugIndexError as exc:
        stderr.write(error_block(exc))
        return 2
    except (OSError, KeyError, TypeError, ValueError) as exc:
        stderr.write(error_block(exc))
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
