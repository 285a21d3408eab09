"""Augmented graphs: horizontal edges on top of a vertical graph, plus distances.

Three constructions are offered: intersection of cells (``ai-infty``),
proximity of cells relative to a level-dependent threshold (``ai-b``) and
hand-written graphs (``explicit``).  Horizontal distances are BFS distances
inside one level; ``INF`` marks disconnected pairs.
"""
from __future__ import annotations

import logging
import math
import re
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType
from typing import Mapping

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from . import ifs
from .errors import BudgetExceeded, ExpansivenessViolation, InvalidInput, InvalidParameter, UndecidedPairs
from .words import VerticalGraph, ancestors_at, parse_lines, word_str

log = logging.getLogger(__name__)

INF = math.inf
MATRIX_LIMIT = 3000


class AugmentedGraph:
    """Vertical graph plus symmetric, irreflexive same-level horizontal adjacency."""

    def __init__(self, base: VerticalGraph, horizontal: Mapping, provenance: dict):
        self.base = base
        adj = {v: () for v in base.vertices()}
        for v, nbrs in horizontal.items():
            if v not in base:
                raise InvalidInput(f"horizontal edge at unknown vertex {v!r}")
            adj[v] = tuple(sorted(set(nbrs), key=base.index))
        for v, nbrs in adj.items():
            for w in nbrs:
                if w == v:
                    raise InvalidInput(f"loop at {v!r}")
                if base.level_of[w] != base.level_of[v]:
                    raise InvalidInput(f"horizontal edge {v!r}-{w!r} crosses levels")
                if v not in adj[w] and v not in horizontal.get(w, ()):
                    raise InvalidInput(f"horizontal edge {v!r}-{w!r} is not symmetric")
        self.horizontal = MappingProxyType(adj)
        self.provenance = dict(provenance)
        self._dh_cache: dict = {}
        self.system = None

    # -- basic queries --------------------------------------------------
    @property
    def depth(self) -> int:
        return self.base.depth

    @property
    def levels(self):
        return self.base.levels

    def level(self, n: int):
        return self.base.levels[n]

    def neighbors(self, v):
        return self.horizontal[v]

    def label(self, v) -> str:
        return self.base.label(v)

    def horizontal_edges(self, n: int | None = None) -> list:
        levels = range(self.depth + 1) if n is None else [n]
        out = []
        for k in levels:
            for v in self.base.levels[k]:
                for w in self.horizontal[v]:
                    if self.base.index(v) < self.base.index(w):
                        out.append((v, w))
        return out

    def degree(self, v) -> int:
        return len(self.base.parents[v]) + len(self.base.children[v]) + len(self.horizontal[v])

    def truncate(self, depth: int) -> "AugmentedGraph":
        if depth >= self.depth:
            return self
        base = self.base.truncate(depth)
        g = AugmentedGraph(base, {v: self.horizontal[v] for v in base.vertices()}, self.provenance)
        g.system = self.system
        return g

    # -- per-level horizontal distances -----------------------------------
    def level_matrix(self, n: int) -> np.ndarray:
        """All-pairs horizontal distances on level n (float, inf when disconnected)."""
        m = self._dh_cache.get(n)
        if m is not None:
            return m
        level = self.base.levels[n]
        size = len(level)
        if size > MATRIX_LIMIT:
            raise InvalidParameter(f"level {n} has {size} vertices; matrix route limited to {MATRIX_LIMIT}")
        rows, cols = [], []
        idx = self.base.index
        for v in level:
            i = idx(v)
            for w in self.horizontal[v]:
                rows.append(i)
                cols.append(idx(w))
        A = csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(size, size))
        m = shortest_path(A, method="D", directed=False, unweighted=True)
        m.setflags(write=False)
        self._dh_cache[n] = m
        return m

    def bfs_from(self, sources, radius: float = INF) -> dict:
        """Horizontal BFS distances from a set of same-level sources, up to radius."""
        dist = {s: 0 for s in sources}
        q = deque(sources)
        while q:
            v = q.popleft()
            d = dist[v]
            if d >= radius:
                continue
            for w in self.horizontal[v]:
                if w not in dist:
                    dist[w] = d + 1
                    q.append(w)
        return dist


# -- constructions -----------------------------------------------------------

def _float_box(cell, inflate: float):
    lo, hi = cell.box
    err = [float(e) for e in cell.error]
    return ([float(v) - e - inflate for v, e in zip(lo, err)],
            [float(v) + e + inflate for v, e in zip(hi, err)])


def candidate_pairs(cells: list, inflate: float) -> list:
    """Index pairs whose (inflated, float) boxes overlap, by sort and sweep on axis 0."""
    boxes = [_float_box(c, inflate) for c in cells]
    order = sorted(range(len(cells)), key=lambda i: boxes[i][0][0])
    active: list = []
    out = []
    dim = len(boxes[0][0]) if boxes else 0
    for i in order:
        lo_i, hi_i = boxes[i]
        active = [j for j in active if boxes[j][1][0] >= lo_i[0]]
        for j in active:
            lo_j, hi_j = boxes[j]
            if all(lo_i[a] <= hi_j[a] and lo_j[a] <= hi_i[a] for a in range(1, dim)):
                out.append((min(i, j), max(i, j)))
        active.append(i)
    out.sort()
    return out


def _cell_for(sys, g: VerticalGraph, v):
    if g.kind != "words":
        raise InvalidParameter("geometric constructions need a word-labelled vertical graph")
    return sys.cell(v)


def _inflation(cells) -> float:
    scale = max((max(abs(float(t)) for p in c.box for t in p) for c in cells), default=1.0)
    return 1e-9 * max(scale, 1.0)


def augment_ai_infty(sys, vg: VerticalGraph, refine: int = 8) -> AugmentedGraph:
    """Horizontal edges between same-level vertices whose cells meet."""
    adj: dict = {v: set() for v in vg.vertices()}
    undecided = []
    pcf = sys.pcf is not None and sys.arithmetic.exact and sys.cell_model == "attractor"
    for n in range(1, vg.depth + 1):
        level = vg.levels[n]
        cells = [_cell_for(sys, vg, v) for v in level]
        if pcf:
            owners: dict = {}
            for v, c in zip(level, cells):
                for p in c.vertex_images:
                    owners.setdefault(p, []).append(v)
            for vs in owners.values():
                for a in vs:
                    for b in vs:
                        if a != b:
                            adj[a].add(b)
            continue
        for i, j in candidate_pairs(cells, _inflation(cells)):
            r = ifs.cells_intersect(cells[i], cells[j], refine=refine)
            if r.verdict == "yes":
                adj[level[i]].add(level[j])
                adj[level[j]].add(level[i])
            elif r.verdict == "undecided":
                undecided.append((vg.label(level[i]), vg.label(level[j]), r.gap))
    if undecided:
        raise UndecidedPairs(f"{len(undecided)} cell pairs could not be decided", undecided)
    g = AugmentedGraph(vg, adj, {"kind": "ai-infty"})
    g.system = sys
    return g


_LOG_RE = re.compile(r"^\s*(?:log|ln)\s*\(?\s*([0-9/.]+)\s*\)?\s*$")


def parse_rate(b) -> tuple[float, object]:
    """Return (b, q) with q = exp(-b); q is an exact Fraction when b is written as log(r)."""
    if isinstance(b, str):
        m = _LOG_RE.match(b)
        if m:
            r = Fraction(m.group(1))
            if r <= 1:
                raise InvalidParameter(f"rate log({r}) must be positive")
            return math.log(r), 1 / r
        b = float(b)
    b = float(b)
    if not b > 0:
        raise InvalidParameter(f"rate b must be positive, got {b}")
    return b, Fraction(math.exp(-b))


def ai_b_decide(a, b, threshold, max_refine: int = 3) -> str:
    """'edge', 'none' or 'undecided' for dist(cell a, cell b) <= threshold."""
    t2 = threshold * threshold
    for r in range(max_refine + 1):
        iv = ifs.cell_distance(a, b, refine=r)
        if iv.hi_sq <= t2:
            return "edge"
        if iv.lo_sq > t2:
            return "none"
        if a.system.cell_model == "index":
            break
    return "undecided"


def augment_ai_b(sys, vg: VerticalGraph, b, gamma) -> AugmentedGraph:
    """Horizontal edges between same-level vertices whose cells lie within gamma*e^(-b n)."""
    b_val, q = parse_rate(b)
    gamma = Fraction(gamma) if not isinstance(gamma, str) else Fraction(gamma)
    if gamma <= 0:
        raise InvalidParameter("gamma must be positive")
    adj: dict = {v: set() for v in vg.vertices()}
    undecided = []
    for n in range(1, vg.depth + 1):
        level = vg.levels[n]
        cells = [_cell_for(sys, vg, v) for v in level]
        t = gamma * q ** n
        for i, j in candidate_pairs(cells, float(t) + _inflation(cells)):
            verdict = ai_b_decide(cells[i], cells[j], t)
            if verdict == "edge":
                adj[level[i]].add(level[j])
                adj[level[j]].add(level[i])
            elif verdict == "undecided":
                undecided.append((vg.label(level[i]), vg.label(level[j]), float(t)))
    if undecided:
        raise UndecidedPairs(f"{len(undecided)} pairs straddle the threshold", undecided)
    g = AugmentedGraph(vg, adj, {"kind": "ai-b", "b": b_val, "gamma": str(gamma)})
    g.system = sys
    return g


def load_explicit(description) -> AugmentedGraph:
    """Build a graph from text lines or a dict with ``levels``, ``parents`` and ``horizontal``."""
    if isinstance(description, str):
        vg, by_id, other = parse_lines(description.splitlines())
        pairs = []
        for row in other:
            if row[0] != "H" or len(row) != 3:
                raise InvalidInput(f"unknown record {row!r}")
            pairs.append((by_id[int(row[1])], by_id[int(row[2])]))
    else:
        levels = description["levels"]
        vg = VerticalGraph.from_levels(levels, description.get("parents", {}),
                                       description.get("kind", "labels"), description.get("alphabet"))
        pairs = [tuple(p) for p in description.get("horizontal", ())]
    adj: dict = {v: set() for v in vg.vertices()}
    for a, b in pairs:
        if a not in vg or b not in vg:
            raise InvalidInput(f"horizontal edge {a!r}-{b!r} names an unknown vertex")
        if vg.level_of[a] != vg.level_of[b]:
            raise InvalidInput(f"horizontal edge {a!r}-{b!r} crosses levels")
        if a == b:
            raise InvalidInput(f"loop at {a!r}")
        adj[a].add(b)
        adj[b].add(a)
    return AugmentedGraph(vg, adj, {"kind": "explicit"})


def dump_graph(g: AugmentedGraph) -> str:
    from .words import dump_lines
    lines, ids = dump_lines(g.base)
    for v, w in g.horizontal_edges():
        lines.append(f"H\t{ids[v]}\t{ids[w]}")
    return "\n".join(lines) + "\n"


def to_dot(g: AugmentedGraph, name: str = "G") -> str:
    ids = {v: i for i, v in enumerate(g.base.vertices())}
    out = [f"graph {name} {{", "  node [shape=circle, fontsize=10];"]
    for n, level in enumerate(g.levels):
        names = " ".join(f"n{ids[v]};" for v in level)
        out.append(f"  {{ rank=same; {names} }}")
        for v in level:
            out.append(f'  n{ids[v]} [label="{g.label(v)}"];')
    for v in g.base.vertices():
        for c in g.base.children[v]:
            out.append(f"  n{ids[v]} -- n{ids[c]} [style=solid];")
    for v, w in g.horizontal_edges():
        out.append(f"  n{ids[v]} -- n{ids[w]} [style=dashed];")
    out.append("}")
    return "\n".join(out) + "\n"


# -- distances -------------------------------------------------------------

def horizontal_distance(g: AugmentedGraph, x, y):
    """BFS distance inside one level; INF across levels or components."""
    if g.base.level_of[x] != g.base.level_of[y]:
        return INF
    if x == y:
        return 0
    n = g.base.level_of[x]
    m = g._dh_cache.get(n)
    if m is not None:
        d = m[g.base.index(x), g.base.index(y)]
        return INF if math.isinf(d) else int(d)
    dist = g.bfs_from([x])
    return dist.get(y, INF)


def cell_neighbors(sys, word, refine: int = 8) -> list:
    """Same-level words whose cells meet the cell of ``word``, found by pruned descent from the root.

    Nested cells let a prefix be dropped as soon as its cell misses the target.
    """
    word = tuple(word)
    target = sys.cell(word)
    frontier = [()]
    for i in range(len(word)):
        last = i == len(word) - 1
        nxt = []
        for p in frontier:
            for w in sys.children_words(p):
                if w == word[: i + 1]:
                    nxt.append(w)
                    continue
                r = ifs.cells_intersect(sys.cell(w), target, refine)
                if r.verdict == "undecided" and last:
                    raise UndecidedPairs(f"cannot decide whether {word_str(w)} meets {word_str(word)}",
                                         [(w, word)])
                if r.verdict != "no":
                    nxt.append(w)
        frontier = nxt
    return sorted(w for w in frontier if w != word)


def lazy_horizontal_distance(sys, x, y, budget: int = 20000):
    """d_h(x, y) in the intersection graph of one deep level, without building the level.

    Explores the component of x breadth first; INF when it closes without reaching y.
    """
    x, y = tuple(x), tuple(y)
    if len(x) != len(y):
        return INF
    if x == y:
        return 0
    dist = {x: 0}
    q = deque([x])
    while q:
        v = q.popleft()
        for w in cell_neighbors(sys, v):
            if w in dist:
                continue
            dist[w] = dist[v] + 1
            if w == y:
                return dist[w]
            if len(dist) > budget:
                raise BudgetExceeded(f"component of {word_str(x)} exceeds {budget} cells")
            q.append(w)
    return INF


def _set_distance(g: AugmentedGraph, A, B, radius) -> tuple:
    """Least horizontal distance between sets A and B, with the lexicographically least (u, v)."""
    key = g.base.index
    best = (INF, None, None)
    for u in sorted(A, key=key):
        dist = g.bfs_from([u], radius if best[0] is INF else min(radius, best[0]))
        for v in sorted(B, key=key):
            d = dist.get(v)
            if d is not None and d < best[0]:
                best = (d, u, v)
    return best


def _horizontal_path(g: AugmentedGraph, u, v) -> list:
    prev = {u: None}
    q = deque([u])
    while q:
        a = q.popleft()
        if a == v:
            break
        for w in g.horizontal[a]:
            if w not in prev:
                prev[w] = a
                q.append(w)
    path = [v]
    while path[-1] != u:
        path.append(prev[path[-1]])
    return path[::-1]


def _vertical_path(g: AugmentedGraph, x, u) -> list:
    """Path x -> ... -> u going up, choosing the least parent that still reaches u."""
    path = [x]
    lu = g.base.level_of[u]
    cur = x
    while g.base.level_of[cur] > lu:
        for p in g.base.parents[cur]:
            if u in ancestors_at(g.base, p, lu) or p == u:
                cur = p
                break
        path.append(cur)
    return path


@dataclass(frozen=True)
class GeodesicPath:
    vertices: tuple
    shape: str = "convex"          # convex | general
    turning: tuple = ()            # (u, v) for convex paths
    truncation_lower_bound: bool = False

    @property
    def length(self) -> int:
        return len(self.vertices) - 1


def graph_distance(g: AugmentedGraph, x, y, on_violation: str = "fallback"):
    """Distance and a convex geodesic: up to u, across to v, down to y.

    Minimizes over meeting levels j the cost (|x|-j) + (|y|-j) + d_h(A_j(x), A_j(y));
    ties prefer the highest level, then the least u.
    """
    lx, ly = g.base.level_of[x], g.base.level_of[y]
    best = None   # (cost, j, u, v)
    prev_far = False   # ancestors one level up certainly at horizontal distance > 1
    for j in range(0, min(lx, ly) + 1):
        A = ancestors_at(g.base, x, j)
        B = ancestors_at(g.base, y, j)
        vertical = (lx - j) + (ly - j)
        budget = INF if best is None else best[0] - vertical
        h, u, v = _set_distance(g, A, B, budget)
        if h is not INF and (best is None or vertical + h <= best[0]):
            best = (vertical + h, j, u, v)
        if h <= 1 and prev_far:
            pair = (g.label(min(A, key=g.base.index)), g.label(min(B, key=g.base.index)))
            if on_violation == "raise":
                raise ExpansivenessViolation("expansiveness fails along the ancestor chains", pair)
            log.info("expansiveness violation at %s; falling back to BFS", pair)
            return _bfs_distance(g, x, y), GeodesicPath((x, y), "general", (), True)
        prev_far = h > 1 if h is not INF else budget >= 1
    if best is None:
        return INF, GeodesicPath((x, y), "general", (), True)
    cost, j, u, v = best
    up = _vertical_path(g, x, u)
    across = _horizontal_path(g, u, v)
    down = _vertical_path(g, y, v)[::-1]
    verts = tuple(up[:-1] + across + down[1:])
    return cost, GeodesicPath(verts, "convex", (u, v))


def _bfs_distance(g: AugmentedGraph, x, y):
    """Plain BFS over the whole (truncated) graph."""
    dist = {x: 0}
    q = deque([x])
    while q:
        v = q.popleft()
        if v == y:
            return dist[v]
        nbrs = list(g.base.parents[v]) + list(g.base.children[v]) + list(g.horizontal[v])
        for w in nbrs:
            if w not in dist:
                dist[w] = dist[v] + 1
                q.append(w)
    return INF


def bfs_distance(g: AugmentedGraph, x, y):
    return _bfs_distance(g, x, y)


def gromov_product(g: AugmentedGraph, x, y) -> Fraction:
    d, _ = graph_distance(g, x, y)
    if d is INF:
        raise InvalidParameter("vertices are not connected")
    return Fraction(g.base.level_of[x] + g.base.level_of[y] - d, 2)


def check_convex(g: AugmentedGraph, path: GeodesicPath) -> bool:
    """Consecutive vertices adjacent and levels convex along the path."""
    vs = path.vertices
    for a, b in zip(vs, vs[1:]):
        if not (b in g.horizontal[a] or b in g.base.children[a] or b in g.base.parents[a]):
            return False
    lv = [g.base.level_of[v] for v in vs]
    return all(2 * lv[i] <= lv[i - 1] + lv[i + 1] for i in range(1, len(lv) - 1))
