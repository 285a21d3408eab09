"""Boundary points approximated by ray prefixes, and metric scans on them.

A ray prefix is the chain root = x_0, x_1, ..., x_n with x_{i+1} a child of
x_i.  Products of boundary points are reported as intervals built from the
meet index (the last level where the two chains are within horizontal
distance k); metrics are the proxy exp(-a * product).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, brentq, milp
from scipy.sparse.csgraph import shortest_path

from . import geometry as geo
from .errors import BudgetExceeded, InvalidParameter
from .graph import INF, AugmentedGraph, gromov_product, horizontal_distance
from .hyperbolicity import _distance_table
from .ifs import cell_distance, cells_intersect, projection
from .words import WeightVector

CHAIN_BUDGET = 5000


# -- rays ---------------------------------------------------------------------

@dataclass(frozen=True)
class RayPrefix:
    vertices: tuple

    @property
    def depth(self) -> int:
        return len(self.vertices) - 1

    def __getitem__(self, i):
        return self.vertices[i]

    @property
    def last(self):
        return self.vertices[-1]

    def truncate(self, n: int) -> "RayPrefix":
        return RayPrefix(self.vertices[: n + 1])


def ray_through(g: AugmentedGraph, v, depth: int | None = None) -> RayPrefix:
    """Ray from the root through v (least parents upward), prolonged by least children."""
    up = [v]
    while g.base.level_of[up[-1]] > 0:
        up.append(g.base.parents[up[-1]][0])
    chain = up[::-1]
    depth = g.depth if depth is None else depth
    while len(chain) - 1 < depth:
        kids = g.base.children[chain[-1]]
        if not kids:
            break
        chain.append(kids[0])
    return RayPrefix(tuple(chain[: depth + 1]))


def ray_of_word(word) -> RayPrefix:
    """Prefix chain of a word in a coding tree (no graph needed)."""
    w = tuple(word)
    return RayPrefix(tuple(w[:i] for i in range(len(w) + 1)))


def boundary_sample(g: AugmentedGraph, depth: int | None = None, level: int | None = None) -> list:
    """Least-child prolongations to ``depth`` of every vertex on ``level`` (default ceil(depth/2))."""
    depth = g.depth if depth is None else depth
    level = math.ceil(depth / 2) if level is None else level
    return [ray_through(g, v, depth) for v in g.base.levels[level]]


def closest_prolongation(sys, u, v, depth: int) -> tuple:
    """Extend u and v to length ``depth`` by the child pair of least certified distance at each step.

    The limit points of the two rays then realize the cell distance up to the last cells' size.
    """
    u, v = tuple(u), tuple(v)
    if len(u) != len(v):
        raise InvalidParameter("words must have the same length")
    while len(u) < depth:
        best = None
        for a in sys.children_words(u):
            for b in sys.children_words(v):
                lo = cell_distance(sys.cell(a), sys.cell(b)).lo_sq
                if best is None or lo < best[0]:
                    best = (lo, a, b)
        _, u, v = best
    return u, v


# -- meet index and products ---------------------------------------------------

class LazyAdjacency:
    """Horizontal distance capped at 2 from the cell intersection predicate alone.

    Returns 0 for equal words, 1 for intersecting cells and 2 for "at least 2";
    only valid for thresholds k = 1.
    """

    def __init__(self, sys):
        self.sys = sys

    def __call__(self, x, y):
        if x == y:
            return 0
        r = cells_intersect(self.sys.cell(x), self.sys.cell(y))
        if r.verdict == "undecided":
            raise InvalidParameter(f"cannot decide adjacency of {x} and {y}")
        return 1 if r.verdict == "yes" else 2


def meet_index(x: RayPrefix, y: RayPrefix, k: int = 1, g: AugmentedGraph | None = None, dh=None):
    """(largest i <= n with d_h(x_i, y_i) <= k, open flag)."""
    if x.depth != y.depth:
        raise InvalidParameter("ray prefixes must have the same depth")
    if dh is None:
        if g is None:
            raise InvalidParameter("need a graph or a distance oracle")
        dh = lambda a, b: _capped_distance(g, a, b, k)
    elif isinstance(dh, LazyAdjacency) and k != 1:
        raise InvalidParameter("the lazy oracle only decides k = 1")
    n = x.depth
    best = 0
    for i in range(n + 1):
        if dh(x[i], y[i]) <= k:
            best = i
    return best, best == n


def _capped_distance(g: AugmentedGraph, x, y, k: int):
    """d_h(x, y) when it is at most k, otherwise INF (bounded BFS)."""
    if x == y:
        return 0
    if g.base.level_of[x] != g.base.level_of[y]:
        return INF
    return g.bfs_from([x], k).get(y, INF)


@dataclass(frozen=True)
class GromovInterval:
    lo: float
    hi: float
    meet: int
    open: bool
    monotone_lower: Fraction | None = None

    @property
    def width(self) -> float:
        return self.hi - self.lo


def boundary_gromov(x: RayPrefix, y: RayPrefix, k: int, D0, g: AugmentedGraph | None = None, dh=None,
                    with_monotone: bool = True) -> GromovInterval:
    """[meet - D0 - k, meet + D0 + k] for the product of the two limit points."""
    meet, open_ = meet_index(x, y, k, g, dh)
    D0 = Fraction(D0)
    mono = None
    if with_monotone and g is not None:
        mono = gromov_product(g, x.last, y.last) if x.last != y.last else Fraction(x.depth)
    lo = float(meet - D0 - k)
    hi = INF if open_ else float(meet + D0 + k)
    return GromovInterval(lo, hi, meet, open_, mono)


@dataclass(frozen=True)
class MetricEstimate:
    lo: float
    hi: float
    method: str
    params: dict = field(default_factory=dict)


def theta_estimate(x: RayPrefix, y: RayPrefix, a: float, method: str = "gromov-proxy",
                   g: AugmentedGraph | None = None, k: int = 1, D0=3, budget: int = CHAIN_BUDGET) -> MetricEstimate:
    if x.vertices == y.vertices:
        return MetricEstimate(0.0, 0.0, method, {"a": a})
    if method == "gromov-proxy":
        iv = boundary_gromov(x, y, k, D0, g)
        lo = 0.0 if iv.hi is INF else math.exp(-a * iv.hi)
        return MetricEstimate(lo, math.exp(-a * iv.lo), method, {"a": a, "depth": x.depth, "D0": str(D0), "k": k})
    if method == "chain-infimum":
        if g is None:
            raise InvalidParameter("chain infimum needs the graph")
        val = chain_infimum(g, [x.last, y.last], a, budget)[0, 1]
        return MetricEstimate(0.0, float(val), method, {"a": a, "depth": x.depth, "upper_bound": True})
    raise InvalidParameter(f"unknown method {method!r}")


def product_matrix(g: AugmentedGraph, verts: list) -> np.ndarray:
    """Gromov products among verts, with (x|x) = |x|."""
    D = _distance_table(g, verts)
    lev = np.array([g.base.level_of[v] for v in verts], dtype=float)
    return (lev[:, None] + lev[None, :] - D) / 2


def chain_infimum(g: AugmentedGraph, queries: list, a: float, budget: int = CHAIN_BUDGET) -> np.ndarray:
    """inf over chains inside the truncated vertex set of sum exp(-a (z_{i-1}|z_i)), for query pairs."""
    top = max(g.base.level_of[v] for v in queries)
    verts = [v for level in g.base.levels[: top + 1] for v in level]
    if len(verts) > budget:
        raise BudgetExceeded(f"{len(verts)} vertices exceed the chain budget {budget}")
    G = product_matrix(g, verts)
    W = np.exp(-a * G)
    np.fill_diagonal(W, 0.0)
    pos = {v: i for i, v in enumerate(verts)}
    idx = [pos[v] for v in queries]
    D = shortest_path(W, method="D", directed=False, indices=idx)
    return D[:, idx]


def proxy_metric(g: AugmentedGraph, rays: list, a: float) -> np.ndarray:
    """exp(-a (x_D|y_D)) on the last vertices of the rays; zero on the diagonal."""
    verts = [r.last for r in rays]
    uniq = list(dict.fromkeys(verts))
    G = product_matrix(g, uniq)
    pos = {v: i for i, v in enumerate(uniq)}
    ix = [pos[v] for v in verts]
    M = np.exp(-a * G[np.ix_(ix, ix)])
    same = np.array([[verts[i] == verts[j] for j in range(len(verts))] for i in range(len(verts))])
    M[same] = 0.0
    return M


# -- shadows ---------------------------------------------------------------------

def shadow_sandwich(g: AugmentedGraph, level: int, k: int, a: float, depth: int | None = None,
                    rays: list | None = None, vertices=None) -> dict:
    """Empirical inner/outer radii of k-shadows of level-``level`` vertices, scaled by e^{a n}."""
    rays = boundary_sample(g, depth) if rays is None else rays
    M = proxy_metric(g, rays, a)
    owner = [r[level] for r in rays]
    verts = g.base.levels[level] if vertices is None else vertices
    scale = math.exp(a * level)
    rows = []
    for x in verts:
        mine = [i for i, o in enumerate(owner) if o == x]
        if not mine:
            continue
        near = {y for y in g.base.levels[level] if horizontal_distance(g, x, y) <= k}
        inside = np.array([o in near for o in owner])
        inner = min((M[i][~inside].min() if (~inside).any() else INF) for i in mine)
        outer = max(M[i][inside].max() for i in mine)
        far = [j for j, o in enumerate(owner) if horizontal_distance(g, x, o) > k]
        sep = min((M[i][far].min() for i in mine), default=INF) if far else INF
        rows.append({"x": g.label(x), "inner": inner * scale, "outer": outer * scale, "separation": sep * scale})
    finite = lambda key, f: f([r[key] for r in rows if r[key] is not INF and math.isfinite(r[key])], default=INF)
    return {"level": level, "k": k, "a": a, "rows": rows,
            "C_inner": finite("inner", min), "C_outer": finite("outer", max),
            "gamma": finite("separation", min)}


# -- covering numbers --------------------------------------------------------------

@dataclass(frozen=True)
class CoveringNumbers:
    cover: int          # N^c (exact or greedy upper bound)
    packing: int        # N^p (exact or greedy lower bound)
    separating: int     # N^s (exact or greedy lower bound)
    exact: bool


def _max_independent(conflict: list) -> int:
    """Largest set with no conflicting pair; conflict[i] is a bitmask."""
    n = len(conflict)
    best = 0

    def go(i, chosen_mask, count):
        nonlocal best
        if count + (n - i) <= best:
            return
        if i == n:
            best = max(best, count)
            return
        if not (conflict[i] & chosen_mask):
            go(i + 1, chosen_mask | (1 << i), count + 1)
        go(i + 1, chosen_mask, count)

    go(0, 0, 0)
    return best


def _min_cover(balls: list, n: int) -> int:
    full = (1 << n) - 1
    for size in range(1, n + 1):
        for combo in itertools.combinations(range(n), size):
            m = 0
            for c in combo:
                m |= balls[c]
            if m == full:
                return size
    return n


def _greedy_independent(conflict_rows: np.ndarray) -> int:
    chosen = []
    for i in range(conflict_rows.shape[0]):
        if not any(conflict_rows[i, j] for j in chosen):
            chosen.append(i)
    return len(chosen)


def _greedy_cover(inball: np.ndarray) -> int:
    uncovered = np.ones(inball.shape[0], dtype=bool)
    count = 0
    while uncovered.any():
        gains = (inball & uncovered[None, :]).sum(axis=1)
        c = int(gains.argmax())
        uncovered &= ~inball[c]
        count += 1
    return count


def covering_numbers(D: np.ndarray, r: float, exact_limit: int = 20) -> CoveringNumbers:
    """Covering, packing and separating numbers of a finite metric space with open balls."""
    D = np.asarray(D, dtype=float)
    n = D.shape[0]
    if n == 0:
        return CoveringNumbers(0, 0, 0, True)
    inball = D < r
    # open r-balls around i and j share a point z of F iff some z has D[i,z] < r and D[j,z] < r
    ib = inball.astype(np.int64)
    share = (ib @ ib.T) > 0
    np.fill_diagonal(share, False)
    close = D < r
    np.fill_diagonal(close, False)
    if n <= exact_limit:
        masks = [sum(1 << j for j in range(n) if inball[i, j]) for i in range(n)]
        pack = _max_independent([sum(1 << j for j in range(n) if share[i, j]) for i in range(n)])
        sep = _max_independent([sum(1 << j for j in range(n) if close[i, j]) for i in range(n)])
        return CoveringNumbers(_min_cover(masks, n), pack, sep, True)
    return CoveringNumbers(_greedy_cover(inball), _greedy_independent(share), _greedy_independent(close), False)


def covering_chain_holds(D: np.ndarray, r: float, exact_limit: int = 20) -> bool:
    """N^s_{2r} <= N^p_r <= N^c_r <= N^s_r, using only certified directions for large sets."""
    a = covering_numbers(D, r, exact_limit)
    b = covering_numbers(D, 2 * r, exact_limit)
    if a.exact:
        return b.separating <= a.packing <= a.cover <= a.separating
    # lower bounds on the left never exceed upper bounds on the right
    return b.separating <= a.cover and a.packing <= a.cover


# -- doubling --------------------------------------------------------------------

def _exact_cover(inball: np.ndarray) -> int:
    """Minimum number of rows of a boolean matrix covering every column (integer program)."""
    n = inball.shape[0]
    res = milp(np.ones(n), constraints=LinearConstraint(inball.T.astype(float), lb=1),
               integrality=np.ones(n), bounds=Bounds(0, 1))
    if not res.success:
        raise InvalidParameter(f"cover program failed: {res.message}")
    return int(round(res.fun))


def doubling_scan(D: np.ndarray, radii, exact: bool = False) -> dict:
    """Max over centers of the (r/2)-cover count of B(xi, r), per radius.

    Greedy counts are upper bounds; ``exact`` solves each cover as an integer program.
    """
    D = np.asarray(D, dtype=float)
    cover = _exact_cover if exact else _greedy_cover
    per = []
    for r in radii:
        worst = 1
        seen = set()
        for c in range(D.shape[0]):
            ball = np.nonzero(D[c] < r)[0]
            key = tuple(ball)
            if key in seen:
                continue
            seen.add(key)
            sub = D[np.ix_(ball, ball)]
            worst = max(worst, cover(sub < r / 2))
        per.append(worst)
    return {"radii": list(radii), "max_per_radius": per, "max": max(per) if per else 1, "exact": exact}


# -- Hoelder and Ahlfors scans -------------------------------------------------------

def kappa_proxy(sys, ray: RayPrefix):
    """Projection point of the deepest vertex and its error radius |Phi(x_D)|."""
    cell = sys.cell(ray.last)
    return projection(sys, ray.last), cell.diameter + math.sqrt(sum(float(e) ** 2 for e in cell.error))


def holder_scan(sys, pairs, a: float, b: float, k: int, D0, g: AugmentedGraph | None = None, dh=None) -> dict:
    """Band of rho(kappa xi, kappa eta) * e^{b (xi|eta)} over ray pairs, with kappa error budget."""
    rows, skipped = [], 0
    for x, y in pairs:
        if x.vertices == y.vertices:
            skipped += 1
            continue
        iv = boundary_gromov(x, y, k, D0, g, dh, with_monotone=False)
        if iv.open:
            skipped += 1
            continue
        px, ex = kappa_proxy(sys, x)
        py, ey = kappa_proxy(sys, y)
        rho = math.sqrt(float(geo.dist_sq(px, py)))
        rho_lo = max(rho - ex - ey, 0.0)
        rho_hi = rho + ex + ey
        rows.append({"x": x.last, "y": y.last, "meet": iv.meet, "rho": rho,
                     "lower": rho_lo * math.exp(b * iv.lo), "upper": rho_hi * math.exp(b * iv.hi)})
    return {"rows": rows, "skipped": skipped,
            "band_min": min((r["lower"] for r in rows), default=None),
            "band_max": max((r["upper"] for r in rows), default=None), "a": a, "b": b}


def similarity_exponent(weights) -> float:
    """alpha with sum s_j^alpha = 1, to 1e-12."""
    s = WeightVector(tuple(weights)) if not isinstance(weights, WeightVector) else weights
    vals = [float(v) for v in s.s]
    if not all(0 < v < 1 for v in vals):
        raise InvalidParameter("weights must lie in (0, 1)")
    f = lambda t: sum(v ** t for v in vals) - 1.0
    hi = 1.0
    while f(hi) > 0:
        hi *= 2
        if hi > 1e6:
            raise InvalidParameter("cannot bracket the exponent")
    return brentq(f, 0.0, hi, xtol=1e-12, rtol=4 * np.finfo(float).eps)


def ahlfors_scan(g: AugmentedGraph, weights, a: float, radii_exponents, depth: int | None = None,
                 max_centers: int = 100) -> dict:
    """Band of mu(B(xi, r)) / r^{alpha |log s_*| / a} over sample centers and radii e^{-a j}."""
    s = WeightVector(tuple(weights)) if not isinstance(weights, WeightVector) else weights
    alpha = similarity_exponent(s)
    s_star = float(s.s_min)
    rays = boundary_sample(g, depth)
    level = math.ceil((g.depth if depth is None else depth) / 2)
    M = proxy_metric(g, rays, a)
    masses = np.array([float(s.weight(r[level])) ** alpha for r in rays])
    expo = alpha * abs(math.log(s_star)) / a
    ratios = []
    per_radius = []
    for j in radii_exponents:
        r = math.exp(-a * j)
        vals = []
        for c in range(min(len(rays), max_centers)):
            mu = masses[M[c] < r].sum()
            vals.append(mu / r ** expo)
        per_radius.append((min(vals), max(vals)))
        ratios.extend(vals)
    return {"alpha": alpha, "exponent": expo, "band": (min(ratios), max(ratios)), "per_radius": per_radius}


def meet_product_gap(g: AugmentedGraph, rays: list, k: int = 1) -> dict:
    """Largest |(x_D|y_D) - meet_k| over all pairs of sample rays."""
    P = product_matrix(g, [r.last for r in rays])
    worst, arg = 0.0, None
    for i, j in itertools.combinations(range(len(rays)), 2):
        meet, open_ = meet_index(rays[i], rays[j], k, g)
        if open_:
            continue
        gap = abs(float(P[i, j]) - meet)
        if gap > worst:
            worst, arg = gap, (g.label(rays[i].last), g.label(rays[j].last))
    return {"max_gap": worst, "pairs": len(rays) * (len(rays) - 1) // 2, "witness": arg}
