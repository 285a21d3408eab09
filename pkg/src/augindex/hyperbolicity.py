"""Finite-depth checks of the structural graph conditions.

Every verdict is qualified by the depth it was checked to.  A ``violated``
verdict always carries at least one witness that can be replayed with
:func:`augindex.graph.horizontal_distance`.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import geometry as geo
from .errors import InvalidParameter
from .graph import INF, MATRIX_LIMIT, AugmentedGraph, candidate_pairs, horizontal_distance, parse_rate
from .ifs import cell_distance, cells_intersect, projection
from .words import descendants

HOLDS = "holds-to-depth"
VIOLATED = "violated"


@dataclass
class CriterionReport:
    criterion: str
    depth: int
    verdict: str
    witnesses: list = field(default_factory=list)
    constants: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)      # per-level dicts
    notes: list = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return self.verdict == HOLDS

    def to_text(self) -> str:
        lines = [f"criterion: {self.criterion}", f"depth: {self.depth}", f"verdict: {self.verdict}"]
        for k, v in self.constants.items():
            lines.append(f"{k}: {v}")
        for w in self.witnesses:
            lines.append("witness: " + ", ".join(f"{k}={v}" for k, v in w.items()))
        for r in self.rows:
            lines.append("level: " + ", ".join(f"{k}={v}" for k, v in r.items()))
        for n in self.notes:
            lines.append(f"note: {n}")
        return "\n".join(lines) + "\n"


def _depth(g: AugmentedGraph, depth):
    if depth is None:
        return g.depth
    if depth > g.depth:
        raise InvalidParameter(f"graph only built to depth {g.depth}, asked for {depth}")
    return depth


def _fmt(d):
    return "inf" if d is INF or (isinstance(d, float) and math.isinf(d)) else int(d)


# -- expansiveness ------------------------------------------------------------

def check_expansive(g: AugmentedGraph, depth: int | None = None, max_witnesses: int = 20) -> CriterionReport:
    """Every horizontal edge below level 1 has parents that are equal or adjacent."""
    depth = _depth(g, depth)
    base = g.base
    witnesses, count = [], 0
    for n in range(1, depth + 1):
        for u, v in g.horizontal_edges(n):
            for x in base.parents[u]:
                for y in base.parents[v]:
                    if x != y and y not in g.horizontal[x]:
                        count += 1
                        if len(witnesses) < max_witnesses:
                            witnesses.append({"x": g.label(x), "y": g.label(y), "u": g.label(u),
                                              "v": g.label(v), "d_h(x,y)": _fmt(horizontal_distance(g, x, y))})
    rep = CriterionReport("expansive", depth, VIOLATED if count else HOLDS, witnesses,
                          {"violations": count})
    return rep


# -- departing ---------------------------------------------------------------

def _desc_index(g: AugmentedGraph, n: int, m: int) -> list:
    idx = g.base.index
    return [np.array(sorted(idx(u) for u in descendants(g.base, x, m)), dtype=np.int64)
            for x in g.base.levels[n]]


def _min_over_descendants(E: np.ndarray, desc: list) -> np.ndarray:
    """M[x, y] = min over u in desc[x], v in desc[y] of E[u, v] (inf for empty sets)."""
    size = len(desc)
    R = np.full((size, E.shape[1]), np.inf)
    for i, d in enumerate(desc):
        if len(d):
            R[i] = E[d].min(axis=0)
    M = np.full((size, size), np.inf)
    for j, d in enumerate(desc):
        if len(d):
            M[:, j] = R[:, d].min(axis=1)
    return M


def _departing_matrix(g, m, k, n):
    D = g.level_matrix(n)
    E = g.level_matrix(n + m)
    desc = _desc_index(g, n, m)
    M = _min_over_descendants(E, desc)
    empty = np.array([len(d) == 0 for d in desc])
    bad = (D > k) & (M <= 2 * k)
    bad[empty, :] = False
    bad[:, empty] = False
    xs, ys = np.nonzero(np.triu(bad, 1))
    return [(int(i), int(j)) for i, j in zip(xs, ys)]


def _departing_bfs(g, m, k, n):
    level = g.base.levels[n]
    base = g.base
    out = []
    for i, x in enumerate(level):
        dx = descendants(base, x, m)
        if not dx:
            continue
        near = g.bfs_from([x], k)
        reach = {}
        for u in dx:
            for w, d in g.bfs_from([u], 2 * k).items():
                reach[w] = min(d, reach.get(w, INF))
        hits = set()
        for w in reach:
            hits.update(descendants(base, w, -m))
        for y in hits:
            j = base.index(y)
            if j > i and y not in near:
                out.append((i, j))
    out.sort()
    return out


def departing_violations(g: AugmentedGraph, m: int, k: int, n: int, method: str = "auto") -> list:
    """Index pairs (i, j), i < j, on level n violating the (m, k)-departing condition."""
    if method == "auto":
        size = max(len(g.base.levels[n]), len(g.base.levels[n + m]))
        method = "matrix" if size <= MATRIX_LIMIT else "bfs"
    if method == "matrix":
        return _departing_matrix(g, m, k, n)
    if method == "bfs":
        return _departing_bfs(g, m, k, n)
    raise InvalidParameter(f"unknown method {method!r}")


def _departing_witness(g, m, k, x, y):
    best = None
    for u in sorted(descendants(g.base, x, m), key=g.base.index):
        for v in sorted(descendants(g.base, y, m), key=g.base.index):
            d = horizontal_distance(g, u, v)
            if d <= 2 * k and (best is None or d < best[0]):
                best = (d, u, v)
    d, u, v = best
    return {"x": g.label(x), "y": g.label(y), "u": g.label(u), "v": g.label(v),
            "d_h(x,y)": _fmt(horizontal_distance(g, x, y)), "d_h(u,v)": _fmt(d)}


def check_departing(g: AugmentedGraph, m: int, k: int, depth: int | None = None,
                    method: str = "auto", max_witnesses: int = 20) -> CriterionReport:
    """Same-level pairs farther than k apart must have m-th descendants farther than 2k apart."""
    if m < 1 or k < 1:
        raise InvalidParameter("m and k must be >= 1")
    depth = _depth(g, depth)
    if depth < m + 1:
        raise InvalidParameter(f"depth {depth} too small for m={m}")
    witnesses, rows, total = [], [], 0
    for n in range(0, depth - m + 1):
        bad = departing_violations(g, m, k, n, method)
        total += len(bad)
        rows.append({"level": n, "violations": len(bad)})
        level = g.base.levels[n]
        for i, j in bad:
            if len(witnesses) >= max_witnesses:
                break
            witnesses.append(_departing_witness(g, m, k, level[i], level[j]))
    rep = CriterionReport(f"departing(m={m},k={k})", depth, VIOLATED if total else HOLDS,
                          witnesses, {"violations": total, "L(m,k)": departure_bound(m, k)}, rows)
    return rep


def find_departing_witness(g: AugmentedGraph, m: int, k: int, depth: int | None = None,
                           value: int | None = None):
    """First violating witness whose d_h(x,y) equals ``value`` (any value when None)."""
    depth = _depth(g, depth)
    for n in range(0, depth - m + 1):
        level = g.base.levels[n]
        for i, j in departing_violations(g, m, k, n):
            w = _departing_witness(g, m, k, level[i], level[j])
            if value is None or w["d_h(x,y)"] == value:
                return w
    return None


# -- constants -----------------------------------------------------------------

def departure_bound(m: int, k: int) -> int:
    return math.ceil((2 * m + 1) / k) * k + 2 * m


@dataclass(frozen=True)
class DepartingFacts:
    m: int
    k: int
    L: int
    j0: int
    D0: Fraction
    implications: tuple = ()

    @property
    def counterexamples(self) -> list:
        return [imp for imp in self.implications if imp["premise"] and not imp["conclusion"]]


def derived_departing_facts(m: int, k: int, g: AugmentedGraph | None = None,
                            depth: int | None = None) -> DepartingFacts:
    """L(m,k), j0 and D0; with a graph, also tests the scaling implications empirically."""
    if m < 1 or k < 1:
        raise InvalidParameter("m and k must be >= 1")
    L = departure_bound(m, k)
    j0 = 0
    while 2 ** j0 * k < L + 2:
        j0 += 1
    D0 = max(Fraction(k, 2), Fraction(m * j0))
    imps = []
    if g is not None:
        depth = _depth(g, depth)
        cache: dict = {}

        def holds(mm, kk):
            if (mm, kk) not in cache:
                cache[(mm, kk)] = check_departing(g, mm, kk, depth, max_witnesses=1).holds
            return cache[(mm, kk)]

        base_holds = holds(m, k)
        for ell in (2, 3):
            imps.append({"premise_pair": (m, k), "conclusion_pair": (m, ell * k),
                         "premise": base_holds, "conclusion": holds(m, ell * k)})
        if depth >= 3:
            one = holds(1, 1)
            for pair in ((2, 1), (2, 2)):
                imps.append({"premise_pair": (1, 1), "conclusion_pair": pair,
                             "premise": one, "conclusion": holds(*pair)})
    return DepartingFacts(m, k, L, j0, D0, tuple(imps))


# -- geodesic scan -------------------------------------------------------------

def level_distance_matrices(g: AugmentedGraph, depth: int):
    """Per-level (horizontal, graph) distance matrices via D_n = min(Dh_n, 2 + D_{n-1}[parents])."""
    out = []
    prev = None
    for n in range(depth + 1):
        Dh = g.level_matrix(n)
        if prev is None:
            D = Dh.copy()
        else:
            level = g.base.levels[n]
            idx = g.base.index
            plist = [[idx(p) for p in g.base.parents[v]] for v in level]
            width = max(len(p) for p in plist)
            slots = np.array([p + [p[0]] * (width - len(p)) for p in plist], dtype=np.int64)
            up = np.full(Dh.shape, np.inf)
            for a in range(width):
                for b in range(width):
                    up = np.minimum(up, prev[np.ix_(slots[:, a], slots[:, b])])
            D = np.minimum(Dh, up + 2)
        out.append((Dh, D))
        prev = D
    return out


def horizontal_geodesic_scan(g: AugmentedGraph, depth: int | None = None, passed=()) -> CriterionReport:
    """Longest horizontal geodesic per level (pairs with d_h = d)."""
    depth = _depth(g, depth)
    rows, witnesses, maxima = [], [], []
    for n, (Dh, D) in enumerate(level_distance_matrices(g, depth)):
        ok = np.isfinite(Dh) & (Dh == D)
        vals = np.where(ok, Dh, -1)
        mx = int(vals.max()) if vals.size else 0
        maxima.append(mx)
        rows.append({"level": n, "max_horizontal_geodesic": mx})
        if mx > 0:
            i, j = np.argwhere(vals == mx)[0]
            level = g.base.levels[n]
            witnesses.append({"level": n, "x": g.label(level[i]), "y": g.label(level[j]), "length": mx})
    overall = max(maxima) if maxima else 0
    constants = {"max": overall}
    verdict = HOLDS
    for (m, k) in passed:
        L = departure_bound(m, k)
        constants[f"L({m},{k})"] = L
        if overall > L:
            verdict = VIOLATED
    trend = _trend(maxima)
    constants["trend"] = trend
    rep = CriterionReport("horizontal-geodesics", depth, verdict, witnesses if verdict == VIOLATED or trend == "growing" else witnesses[-1:], constants, rows)
    rep.maxima = maxima
    return rep


def _trend(values) -> str:
    """'growing' when the values after the midpoint exceed everything up to it."""
    v = list(values)
    if len(v) < 4:
        return "stable"
    half = len(v) // 2
    return "growing" if max(v[half + 1:]) > max(v[:half + 1]) else "stable"


def geodesic_bound_consistency(g: AugmentedGraph, depth: int, m_max: int = 3, k_max: int = 3) -> dict:
    """Passing (m,k) pairs bound the geodesic scan by L(m,k); failures of the bound imply (L+1,L+2) fails."""
    scan = horizontal_geodesic_scan(g, depth)
    result = {"max": scan.constants["max"], "passed": [], "inconsistent": []}
    for m in range(1, m_max + 1):
        if depth < m + 1:
            continue
        for k in range(1, k_max + 1):
            if check_departing(g, m, k, depth, max_witnesses=1).holds:
                result["passed"].append((m, k))
                if scan.constants["max"] > departure_bound(m, k):
                    result["inconsistent"].append((m, k))
    return result


# -- four-point delta ----------------------------------------------------------

def _distance_table(g: AugmentedGraph, verts: list) -> np.ndarray:
    """Graph distances among verts in the graph truncated at their largest level."""
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import shortest_path
    top = max(g.base.level_of[v] for v in verts)
    allv = [v for level in g.base.levels[: top + 1] for v in level]
    pos = {v: i for i, v in enumerate(allv)}
    rows, cols = [], []
    for v in allv:
        for w in itertools.chain(g.base.children[v], g.horizontal[v]):
            if w in pos:
                rows.append(pos[v])
                cols.append(pos[w])
    A = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(allv), len(allv)))
    idx = [pos[v] for v in verts]
    return shortest_path(A, method="D", directed=False, unweighted=True, indices=idx)[:, idx]


def four_point_delta(g: AugmentedGraph, sample_size: int = 2000, depth: int | None = None,
                     seed: int = 0, exhaustive_limit: int = 600, a: float | None = None) -> CriterionReport:
    """max over triples of min{(x|z),(z|y)} - (x|y) over vertices of levels <= depth."""
    depth = _depth(g, depth)
    verts = [v for level in g.base.levels[: depth + 1] for v in level]
    lev = np.array([g.base.level_of[v] for v in verts], dtype=float)
    exhaustive = len(verts) <= exhaustive_limit
    if exhaustive:
        D = _distance_table(g, verts)
        G = (lev[:, None] + lev[None, :] - D) / 2
        delta = -np.inf
        for z in range(len(verts)):
            val = np.minimum.outer(G[:, z], G[z, :]) - G
            delta = max(delta, float(val.max()))
        triples = len(verts) ** 3
    else:
        rng = np.random.default_rng(seed)
        picks = rng.integers(0, len(verts), size=(sample_size, 3))
        used = sorted(set(picks.ravel().tolist()))
        sub = [verts[i] for i in used]
        where = {i: t for t, i in enumerate(used)}
        D = _distance_table(g, sub)
        ls = lev[used]
        G = (ls[:, None] + ls[None, :] - D) / 2
        delta = -np.inf
        for x, y, z in picks:
            i, j, t = where[x], where[y], where[z]
            delta = max(delta, min(G[i, t], G[t, j]) - G[i, j])
        triples = sample_size
    delta = max(delta, 0.0)
    constants = {"delta": delta, "exhaustive": exhaustive, "triples": triples}
    if delta > 0:
        constants["a_max"] = math.log(math.sqrt(2)) / delta
    notes = []
    if a is not None and delta > 0 and math.exp(delta * a) >= math.sqrt(2):
        notes.append(f"exp(delta*a) >= sqrt(2); choose a < {constants['a_max']:.6g}")
    return CriterionReport("four-point-delta", depth, HOLDS, [], constants, notes=notes)


def delta_by_level(g: AugmentedGraph, depths, **kw) -> list:
    return [four_point_delta(g, depth=d, **kw).constants["delta"] for d in depths]


# -- degrees -------------------------------------------------------------------

def degree_stats(g: AugmentedGraph) -> CriterionReport:
    per_level = []
    hist: Counter = Counter()
    for n, level in enumerate(g.base.levels):
        degs = [g.degree(v) for v in level]
        hist.update(degs)
        per_level.append(max(degs))
    rows = [{"level": n, "max_degree": d} for n, d in enumerate(per_level)]
    trend = _trend(per_level[:-1]) if len(per_level) > 3 else "stable"
    consts = {"max_degree": max(per_level), "trend": trend,
              "histogram": dict(sorted(hist.items()))}
    rep = CriterionReport("degree", g.depth, HOLDS if trend == "stable" else VIOLATED,
                          [] if trend == "stable" else [{"level": len(per_level) - 2,
                                                          "max_degree": per_level[-2]}], consts, rows)
    rep.per_level = per_level
    return rep


# -- separation conditions -------------------------------------------------------

def _level_cells(sys, g, n):
    return [sys.cell(v) for v in g.base.levels[n]]


def _float_boxes(cells):
    lo = np.array([[float(t) - float(e) for t, e in zip(c.box[0], c.error)] for c in cells])
    hi = np.array([[float(t) + float(e) for t, e in zip(c.box[1], c.error)] for c in cells])
    return lo, hi


def _box_gap(lo, hi, i, j) -> float:
    sep = np.maximum(0.0, np.maximum(lo[i] - hi[j], lo[j] - hi[i]))
    return math.sqrt(float(np.sum(sep ** 2)))


def _incidence(lo, hi, centers, half):
    """Counts of boxes meeting the cube of half-side ``half`` around each center."""
    counts = np.zeros(len(centers), dtype=np.int64)
    for s in range(0, len(centers), 512):
        c = centers[s:s + 512]
        meet = np.all((lo[None, :, :] <= c[:, None, :] + half) & (hi[None, :, :] >= c[:, None, :] - half), axis=2)
        counts[s:s + 512] = meet.sum(axis=1)
    return counts


def check_separation(sys, g: AugmentedGraph, which: str, params: dict | None = None,
                     depth: int | None = None) -> CriterionReport:
    params = dict(params or {})
    depth = _depth(g, depth)
    b, q = parse_rate(params.get("b", "log(2)"))
    if which == "S_b":
        return _scan_sb(sys, g, float(params.get("c", 1.0)), b, depth, params.get("bound"))
    if which == "S_b'":
        return _scan_sb1(sys, g, float(params.get("c1", 1.0)), b, depth, params.get("bound"))
    if which == "S_b''":
        return _scan_sb2(sys, g, params.get("c2", 1), q, depth, params.get("rule", "fixed-point"),
                         params.get("bound"))
    if which == "B_b":
        return _scan_bb(sys, g, params.get("c0", Fraction(1, 100)), q, depth, params.get("rule", "fixed-point"))
    if which == "H":
        return _scan_h(sys, g, q, depth, params.get("pairs"))
    raise InvalidParameter(f"unknown separation condition {which!r}")


def _bounded_verdict(name, maxima, depth, bound, witnesses, extra=None):
    trend = _trend(maxima[1:])
    verdict = HOLDS
    if bound is not None and max(maxima) > bound:
        verdict = VIOLATED
    if trend == "growing" and maxima[-1] >= 2 * max(maxima[1], 1):
        verdict = VIOLATED
    consts = {"max": max(maxima), "trend": trend}
    consts.update(extra or {})
    rows = [{"level": n, "max_count": v} for n, v in enumerate(maxima)]
    return CriterionReport(name, depth, verdict, witnesses if verdict == VIOLATED else witnesses[-1:], consts, rows)


def _scan_sb(sys, g, c, b, depth, bound):
    maxima, witnesses = [], []
    dim = sys.dimension
    for n in range(depth + 1):
        cells = _level_cells(sys, g, n)
        lo, hi = _float_boxes(cells)
        r = c * math.exp(-b * n)
        half = r / (2 * math.sqrt(dim))      # cube with diameter r
        centers = [[float(t) for t in projection(sys, cell.word)] if sys.cell_model == "attractor"
                   else [(float(a) + float(bb)) / 2 for a, bb in zip(*cell.box)] for cell in cells]
        rlo, rhi = sys.region_box if hasattr(sys, "region_box") else ((0,) * dim, (1,) * dim)
        axes = [np.arange(float(rlo[i]), float(rhi[i]) + half, max(r / 2, 1e-12)) for i in range(dim)]
        grid_size = np.prod([len(a) for a in axes])
        pts = np.array(centers, dtype=float)
        if grid_size <= 200_000:
            grid = np.array(list(itertools.product(*axes)), dtype=float)
            pts = np.vstack([pts, grid])
        counts = _incidence(lo, hi, pts, half)
        i = int(counts.argmax())
        maxima.append(int(counts[i]))
        witnesses.append({"level": n, "center": tuple(round(v, 12) for v in pts[i]), "count": int(counts[i])})
    return _bounded_verdict("S_b", maxima, depth, bound, witnesses, {"c": c, "b": b})


def _scan_sb1(sys, g, c1, b, depth, bound):
    maxima, witnesses = [], []
    for n in range(depth + 1):
        cells = _level_cells(sys, g, n)
        lo, hi = _float_boxes(cells)
        r = c1 * math.exp(-b * n)
        pts = np.array([[float(t) for t in projection(sys, cell.word)] for cell in cells])
        counts = _incidence(lo, hi, pts, r)
        i = int(counts.argmax())
        maxima.append(int(counts[i]))
        witnesses.append({"level": n, "xi": g.label(g.base.levels[n][i]), "count": int(counts[i])})
    return _bounded_verdict("S_b'", maxima, depth, bound, witnesses, {"c1": c1, "b": b})


def _scan_sb2(sys, g, c2, q, depth, rule, bound):
    maxima, witnesses = [], []
    c2 = Fraction(c2)
    for n in range(depth + 1):
        level = g.base.levels[n]
        pts = [projection(sys, v, rule) for v in level]
        t = c2 * q ** n
        t2 = t * t
        fl = np.array([[float(x) for x in p] for p in pts])
        best, arg = 0, 0
        for i, p in enumerate(pts):
            near = np.nonzero(np.sum((fl - fl[i]) ** 2, axis=1) <= float(t2) * (1 + 1e-9) + 1e-300)[0]
            cnt = sum(1 for j in near if geo.dist_sq(p, pts[j]) < t2)
            if cnt > best:
                best, arg = cnt, i
        maxima.append(best)
        witnesses.append({"level": n, "y": g.label(level[arg]), "count": best})
    return _bounded_verdict("S_b''", maxima, depth, bound, witnesses, {"c2": str(c2), "rule": rule})


def _point_cell_lo_sq(p, cell, refine):
    """Lower bound on dist(p, K_cell)^2, refined by subdividing up to ``refine`` levels."""
    if cell.system.uses_polygons():
        d = geo.polygon_dist_sq((p,), cell.outer)
    else:
        d = geo.box_dist_sq((p, p), cell.box)
    if d > 0 or refine == 0:
        return d
    return min(_point_cell_lo_sq(p, ch, refine - 1) for ch in cell.children())


def _scan_bb(sys, g, c0, q, depth, rule, refine: int = 4):
    """min over x of dist(iota(x), K \\ K_x) e^{b|x|}, certified from below."""
    rows, worst = [], None
    for n in range(1, depth + 1):
        level = g.base.levels[n]
        level_min = None
        for x in level:
            p = projection(sys, x, rule)
            lo = None
            for y in level:
                if y == x:
                    continue
                d = _point_cell_lo_sq(p, sys.cell(y), refine)
                if lo is None or d < lo:
                    lo = d
            scaled = float(lo) ** 0.5 / float(q) ** n
            if level_min is None or scaled < level_min[0]:
                level_min = (scaled, x)
        rows.append({"level": n, "min_scaled_margin": level_min[0], "at": g.label(level_min[1])})
        if worst is None or level_min[0] < worst[0]:
            worst = (level_min[0], n, level_min[1])
    ok = worst is not None and worst[0] >= float(c0)
    wit = [] if ok else [{"level": worst[1], "x": g.label(worst[2]), "scaled_margin": worst[0]}]
    return CriterionReport("B_b", depth, HOLDS if ok else VIOLATED, wit,
                           {"c0": str(c0), "empirical_c0": worst[0] if worst else None, "rule": rule}, rows)


def _scan_h(sys, g, q, depth, pairs=None):
    """min over disjoint same-level pairs of dist(K_x, K_y) e^{bn}."""
    rows = []
    if pairs is not None:
        for x, y in pairs:
            a, bcell = sys.cell(x), sys.cell(y)
            n = len(x)
            if cells_intersect(a, bcell).verdict != "no":
                continue
            iv = cell_distance(a, bcell)
            rows.append({"level": n, "pair": (g.label(x) if x in g.base else str(x), g.label(y) if y in g.base else str(y)),
                         "scaled_lo": iv.lo / float(q) ** n, "scaled_hi": iv.hi / float(q) ** n})
    else:
        for n in range(1, depth + 1):
            level = g.base.levels[n]
            cells = _level_cells(sys, g, n)
            reach = float(q) ** n * 4 * max(1.0, max(c.diameter for c in cells) / float(q) ** n)
            best, cap = None, math.inf
            lo_box, hi_box = _float_boxes(cells)
            pairs = candidate_pairs(cells, reach)
            # box gaps bound the true distance from below, so pairs whose box gap
            # exceeds the smallest certified upper bound cannot hold the minimum
            gaps = [_box_gap(lo_box, hi_box, i, j) for i, j in pairs]
            for gap, (i, j) in sorted(zip(gaps, pairs)):
                if gap > cap * (1 + 1e-9):
                    break
                if cells_intersect(cells[i], cells[j]).verdict != "no":
                    continue
                iv = cell_distance(cells[i], cells[j])
                cap = min(cap, iv.hi)
                if best is None or iv.lo < best[0]:
                    best = (iv.lo, iv.hi, level[i], level[j])
            if best is not None:
                rows.append({"level": n, "pair": (g.label(best[2]), g.label(best[3])),
                             "scaled_lo": best[0] / float(q) ** n, "scaled_hi": best[1] / float(q) ** n})
    vals = [r["scaled_hi"] for r in rows]
    decaying = len(vals) >= 3 and all(b2 < a2 for a2, b2 in zip(vals, vals[1:])) and vals[-1] < vals[0] / 4
    c_emp = min((r["scaled_lo"] for r in rows), default=None)
    verdict = VIOLATED if decaying else HOLDS
    wit = [rows[-1]] if decaying else []
    return CriterionReport("H", depth, verdict, wit, {"empirical_c": c_emp, "trend": "decaying" if decaying else "stable"}, rows)
