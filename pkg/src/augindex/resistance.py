"""Energy forms and effective resistance on p.c.f. self-similar sets.

Level-n networks glue copies of the base network H along the cells of
X_n(s), each copy scaled by 1/s_x. Vertices are identified by exact point
equality, so the arithmetic of the system must be exact.
"""
from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .boundary import boundary_gromov, ray_of_word
from .errors import InvalidInput, InvalidParameter, NotPCF, SingularSystem
from .graph import graph_distance
from .ifs import Coding
from .words import WeightVector, build_regrouped_tree

EXACT_MAX_LEVEL = 3
FLOAT_TOL = 1e-9


@dataclass(frozen=True)
class HarmonicStructure:
    H: tuple                 # square matrix over V_0, rows indexed like the boundary points
    s: tuple                 # resistance weights, one per map

    def __post_init__(self):
        n = len(self.H)
        if any(len(row) != n for row in self.H):
            raise InvalidParameter("H must be square")
        for p in range(n):
            if sum(self.H[p]) != 0:
                raise InvalidParameter(f"row {p} of H does not sum to zero")
            for q in range(n):
                if self.H[p][q] != self.H[q][p]:
                    raise InvalidParameter("H must be symmetric")
                if p != q and self.H[p][q] < 0:
                    raise InvalidParameter("off-diagonal entries of H must be >= 0")
        if not all(0 < x < 1 for x in self.s):
            raise InvalidParameter("weights must lie in (0, 1)")

    @classmethod
    def make(cls, H, s) -> "HarmonicStructure":
        return cls(tuple(tuple(Fraction(v) for v in row) for row in H), tuple(Fraction(v) for v in s))

    @property
    def s_min(self):
        return min(self.s)


def standard_sg() -> HarmonicStructure:
    return HarmonicStructure.make([[-2, 1, 1], [1, -2, 1], [1, 1, -2]], ["3/5"] * 3)


@dataclass
class ResistanceNetwork:
    level: int
    points: list                      # vertex coordinates, V_0 first, then in order of appearance
    index: dict                       # point -> vertex id
    conductance: dict                 # (i, j) with i < j -> summed conductance
    cells: list                       # words of X_n(s)
    first_level: list                 # level at which each vertex appears
    structure: HarmonicStructure = field(repr=False)

    @property
    def n_vertices(self) -> int:
        return len(self.points)

    @property
    def n_edges(self) -> int:
        return len(self.conductance)

    def vertices_at(self, m: int) -> list:
        """Ids of V_m, which is a prefix-closed subset of V_n for m <= n."""
        return [i for i, lv in enumerate(self.first_level) if lv <= m]

    def ids(self, pts) -> list:
        out = []
        for p in pts:
            if isinstance(p, int):
                out.append(p)
            elif tuple(p) in self.index:
                out.append(self.index[tuple(p)])
            else:
                raise InvalidInput(f"{p} is not a vertex of V_{self.level}")
        return out

    def laplacian_rows(self) -> list:
        rows = [dict() for _ in self.points]
        for (i, j), c in self.conductance.items():
            rows[i][j] = rows[i].get(j, 0) + c
            rows[j][i] = rows[j].get(i, 0) + c
            rows[i][i] = rows[i].get(i, 0) - c
            rows[j][j] = rows[j].get(j, 0) - c
        return rows

    def edge_lines(self) -> list:
        return [f"{i}\t{j}\t{c}" for (i, j), c in sorted(self.conductance.items())]


def build_network(sys, hs: HarmonicStructure, n: int) -> ResistanceNetwork:
    data = sys.pcf
    if data is None:
        raise NotPCF("energy networks need a p.c.f. system with certified critical data")
    if not sys.arithmetic.exact:
        raise InvalidParameter("vertex merging needs exact arithmetic")
    if len(hs.H) != len(data.boundary) or len(hs.s) != sys.alphabet:
        raise InvalidParameter(f"H is {len(hs.H)}x{len(hs.H)} but V_0 has {len(data.boundary)} points; "
                               f"s has {len(hs.s)} entries for {sys.alphabet} maps")
    if n < 0:
        raise InvalidParameter("level must be >= 0")
    tree = build_regrouped_tree(WeightVector(tuple(float(x) for x in hs.s)), n)
    points, index, first = [], {}, []

    def vid(p, lv):
        p = tuple(p)
        if p not in index:
            index[p] = len(points)
            points.append(p)
            first.append(lv)
        return index[p]

    for p in data.boundary:
        vid(p, 0)
    for lv in range(1, n + 1):
        for w in tree.levels[lv]:
            for p in sys.cell(w).vertex_images:
                vid(p, lv)
    cond: dict = {}
    nb = len(data.boundary)
    for w in tree.levels[n]:
        aff = sys.cell(w).map
        sx = math.prod(hs.s[i - 1] for i in w) if w else Fraction(1)
        ids = [index[tuple(aff(p))] for p in data.boundary]
        for p, q in itertools.combinations(range(nb), 2):
            h = hs.H[p][q]
            if h == 0:
                continue
            i, j = sorted((ids[p], ids[q]))
            cond[(i, j)] = cond.get((i, j), 0) + h / sx
    return ResistanceNetwork(n, points, index, cond, list(tree.levels[n]), first, hs)


def energy(net: ResistanceNetwork, u) -> Fraction | float:
    """Quadratic form sum c_ij (u_i - u_j)^2 for u indexed by vertex id."""
    return sum(c * (u[i] - u[j]) ** 2 for (i, j), c in net.conductance.items())


@dataclass
class EnergyValue:
    value: object
    minimizer: list
    residual: float
    exact: bool
    gap: object = None                 # E_m[u] - min E_n, zero for regular structures

    @property
    def regular(self) -> bool:
        if self.gap is None:
            return True
        return self.gap == 0 if self.exact else abs(self.gap) <= FLOAT_TOL


def _interior_components(net: ResistanceNetwork, interior: list, fixed: set) -> list:
    """Connected pieces of the interior that never reach a fixed vertex."""
    adj = {i: set() for i in interior}
    touches = {i: False for i in interior}
    for (i, j) in net.conductance:
        if i in adj and j in adj:
            adj[i].add(j)
            adj[j].add(i)
        elif i in adj and j in fixed:
            touches[i] = True
        elif j in adj and i in fixed:
            touches[j] = True
    seen, bad = set(), []
    for v in interior:
        if v in seen:
            continue
        comp, stack = [], [v]
        seen.add(v)
        while stack:
            x = stack.pop()
            comp.append(x)
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        if not any(touches[x] for x in comp):
            bad.append(sorted(comp))
    return bad


def _solve_exact(A: list, rhs: list) -> list:
    n = len(A)
    M = [row[:] + [rhs[i]] for i, row in enumerate(A)]
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            raise SingularSystem("singular Dirichlet system", [col])
        M[col], M[piv] = M[piv], M[col]
        pv = M[col][col]
        for r in range(col + 1, n):
            f = M[r][col]
            if f == 0:
                continue
            f = f / pv
            Mr, Mc = M[r], M[col]
            for c in range(col, n + 1):
                if Mc[c] != 0:
                    Mr[c] -= f * Mc[c]
    x = [Fraction(0)] * n
    for r in range(n - 1, -1, -1):
        acc = M[r][n] - sum(M[r][c] * x[c] for c in range(r + 1, n))
        x[r] = acc / M[r][r]
    return x


def dirichlet_solve(net: ResistanceNetwork, fixed: dict, exact: bool | None = None) -> EnergyValue:
    """Minimize the energy over functions equal to ``fixed`` (id -> value) on the given vertices."""
    exact = net.level <= EXACT_MAX_LEVEL if exact is None else exact
    interior = [i for i in range(net.n_vertices) if i not in fixed]
    bad = _interior_components(net, interior, set(fixed))
    if bad:
        raise SingularSystem("interior pieces with no fixed vertex", bad)
    pos = {v: k for k, v in enumerate(interior)}
    rows = net.laplacian_rows()
    u = [None] * net.n_vertices
    for i, val in fixed.items():
        u[i] = Fraction(val) if exact else float(val)
    residual = 0.0
    if interior:
        if exact:
            A = [[Fraction(0)] * len(interior) for _ in interior]
            b = [Fraction(0)] * len(interior)
            for v, k in pos.items():
                for j, c in rows[v].items():
                    if j in pos:
                        A[k][pos[j]] = Fraction(c)
                    else:
                        b[k] -= c * u[j]
            x = _solve_exact(A, b)
        else:
            A = np.zeros((len(interior), len(interior)))
            b = np.zeros(len(interior))
            for v, k in pos.items():
                for j, c in rows[v].items():
                    if j in pos:
                        A[k, pos[j]] = float(c)
                    else:
                        b[k] -= float(c) * u[j]
            x = np.linalg.solve(A, b)
            residual = float(np.max(np.abs(A @ x - b)))
            x = list(map(float, x))
        for v, k in pos.items():
            u[v] = x[k]
    return EnergyValue(energy(net, u), u, residual, exact)


def harmonic_extension(net_m: ResistanceNetwork, net_n: ResistanceNetwork, data, exact: bool | None = None) -> EnergyValue:
    """Harmonic extension of data on V_m (list in V_m id order, or point -> value) into V_n."""
    if net_m.level > net_n.level:
        raise InvalidParameter("need m <= n")
    if net_m.structure != net_n.structure:
        raise InvalidParameter("networks come from different harmonic structures")
    if isinstance(data, dict):
        vals = {net_m.ids([p])[0]: v for p, v in data.items()}
    else:
        if len(data) != net_m.n_vertices:
            raise InvalidInput(f"expected {net_m.n_vertices} values on V_{net_m.level}")
        vals = dict(enumerate(data))
    # V_m keeps its ids inside V_n since vertices are numbered in order of appearance
    fixed = {net_n.index[net_m.points[i]]: v for i, v in vals.items()}
    ev = dirichlet_solve(net_n, fixed, exact)
    if len(vals) == net_m.n_vertices:
        conv = Fraction if ev.exact else float
        base = energy(net_m, [conv(vals[i]) for i in range(net_m.n_vertices)])
        ev.gap = base - ev.value
    return ev


def effective_resistance(net: ResistanceNetwork, F, G, exact: bool | None = None):
    """1 / min energy over u = 1 on F, u = 0 on G; zero when F and G meet."""
    f, g = set(net.ids(F)), set(net.ids(G))
    if not f or not g:
        raise InvalidParameter("F and G must be nonempty")
    if f & g:
        return Fraction(0) if (exact if exact is not None else net.level <= EXACT_MAX_LEVEL) else 0.0
    fixed = {i: 1 for i in f}
    fixed.update({i: 0 for i in g})
    ev = dirichlet_solve(net, fixed, exact)
    return 1 / ev.value


def resistance_matrix(net: ResistanceNetwork, ids=None) -> np.ndarray:
    """Point-to-point resistances among ``ids`` via the Laplacian pseudo-inverse (float)."""
    ids = list(range(net.n_vertices)) if ids is None else list(ids)
    n = net.n_vertices
    L = np.zeros((n, n))
    for (i, j), c in net.conductance.items():
        c = float(c)
        L[i, j] -= c
        L[j, i] -= c
        L[i, i] += c
        L[j, j] += c
    P = np.linalg.pinv(L)
    d = np.diag(P)[ids]
    return d[:, None] + d[None, :] - 2 * P[np.ix_(ids, ids)]


# -- scans -----------------------------------------------------------------------

def disjoint_cell_scan(sys, hs: HarmonicStructure, n: int, start: int = 1, cross_check: bool = False) -> dict:
    """min over disjoint same-level cells of R(S_x V_0, S_y V_0) * s_min^-|x|, per level."""
    per_level, witnesses, cross = {}, {}, []
    for m in range(start, n + 1):
        net = build_network(sys, hs, m)
        deeper = build_network(sys, hs, m + 1) if cross_check else None
        best, arg = None, None
        cells = net.cells
        imgs = {w: net.ids(sys.cell(w).vertex_images) for w in cells}
        for x, y in itertools.combinations(cells, 2):
            if len(x) != len(y) or set(imgs[x]) & set(imgs[y]):
                continue
            R = float(effective_resistance(net, imgs[x], imgs[y], exact=False))
            val = R * float(hs.s_min) ** (-len(x))
            if best is None or val < best:
                best, arg = val, (x, y, R)
            if deeper is not None:
                R2 = float(effective_resistance(deeper, [net.points[i] for i in imgs[x]],
                                                [net.points[i] for i in imgs[y]], exact=False))
                cross.append(abs(R2 - R))
        per_level[m] = best
        if arg:
            witnesses[m] = {"x": arg[0], "y": arg[1], "R": arg[2]}
    found = [v for v in per_level.values() if v is not None]
    out = {"per_level": per_level, "witnesses": witnesses,
           "gamma_prime": min(found) if found else None,
           "vacuous_levels": [m for m, v in per_level.items() if v is None]}
    if cross_check:
        out["max_level_change"] = max(cross) if cross else 0.0
    return out


def vertex_coding(sys, net: ResistanceNetwork, vid: int) -> Coding:
    """Least eventually periodic coding among the cells of X_n(s) containing the vertex."""
    data = sys.pcf
    p = net.points[vid]
    best = None
    for w in net.cells:
        aff = sys.cell(w).map
        for q, c in zip(data.boundary, data.boundary_codings):
            if tuple(aff(q)) == p:
                cand = c.prepend(w)
                if best is None or cand.sort_key() < best.sort_key():
                    best = cand
    if best is None:
        raise InvalidInput(f"vertex {vid} has no coding at level {net.level}")
    return best


def theta_resistance_scan(sys, hs: HarmonicStructure, a: float, g, n: int = 3, sample: int = 50, seed: int = 0,
                   depth: int | None = None, k: int = 1, D0=3) -> dict:
    """Band of theta_a(xi, eta) / R(xi, eta)^(a/|log s_min|) over sampled vertex pairs of V_n.

    theta_a uses exp(-a (x_D|y_D)) on depth-D prefixes of the vertex codings; the
    error bars come from the Gromov interval of the prefixes.
    """
    depth = g.depth if depth is None else depth
    net = build_network(sys, hs, n)
    rng = random.Random(seed)
    pairs = list(itertools.combinations(range(net.n_vertices), 2))
    chosen = sorted(rng.sample(pairs, min(sample, len(pairs))))
    codings = {v: vertex_coding(sys, net, v) for v in sorted({v for pr in chosen for v in pr})}
    Rm = resistance_matrix(net)
    expo = a / abs(math.log(float(hs.s_min)))
    rows, skipped = [], 0
    for i, j in chosen:
        x = ray_of_word(codings[i].prefix(depth))
        y = ray_of_word(codings[j].prefix(depth))
        iv = boundary_gromov(x, y, k, D0, g)
        if iv.open:
            skipped += 1
            continue
        gp, _ = graph_distance(g, x.last, y.last)
        prod = (2 * depth - gp) / 2
        R = float(Rm[i, j])
        theta = math.exp(-a * prod)
        rows.append({"i": i, "j": j, "xi": str(codings[i]), "eta": str(codings[j]), "R": R,
                     "product": prod, "theta": theta, "ratio": theta / R ** expo,
                     "theta_lo": math.exp(-a * iv.hi), "theta_hi": math.exp(-a * iv.lo)})
    ratios = [r["ratio"] for r in rows]
    lo, hi = (min(ratios), max(ratios)) if ratios else (math.nan, math.nan)
    return {"rows": rows, "skipped_open": skipped, "lo": lo, "hi": hi,
            "spread": hi / lo if ratios else math.nan, "exponent": expo, "depth": depth,
            "kappa_budget": math.exp(a)}


def band_within_budget(band: dict, deeper: dict) -> bool:
    """A deeper rerun may widen each band endpoint by at most the factor exp(a)."""
    f = band["kappa_budget"]
    return deeper["lo"] >= band["lo"] / f and deeper["hi"] <= band["hi"] * f


def diameter_estimate(net: ResistanceNetwork) -> float:
    """Largest point-to-point resistance on V_n, a stand-in for the resistance diameter of K."""
    return float(resistance_matrix(net).max())


def energy_sequence(nets: list, u) -> list:
    """E_n[u restricted to V_n] along nested networks; u is indexed by the ids of the deepest one."""
    deepest = nets[-1]
    out = []
    for net in nets:
        ids = [deepest.index[p] for p in net.points]
        out.append(energy(net, [u[i] for i in ids]))
    return out
