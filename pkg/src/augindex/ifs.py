"""Contractive systems, composed cells and certified cell predicates.

A cell is described twice: an outer region (the image of an invariant
convex region U) that contains it, and a finite inner sample of attractor
points.  Intersection and distance answers are derived from these two
approximations, with optional refinement by subdivision, and are exact in
the rational and quadratic arithmetic modes.

Systems with cell model ``"index"`` use the outer region itself as the cell
(rectangle partitions, interval cells); ``"attractor"`` systems use the
attractor pieces S_x(K).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

from . import geometry as geo
from .errors import DepthLimitError, InvalidParameter, NotPCF
from .scalars import QuadraticNumber, parse_exact
from .words import Word, word_str

FLOAT_RATIO_FLOOR = 1e-280


@dataclass(frozen=True)
class Arithmetic:
    mode: str = "rational"      # rational | quadratic | float
    d: int | None = None
    eps: float = 1e-12

    def __post_init__(self):
        if self.mode not in ("rational", "quadratic", "float"):
            raise InvalidParameter(f"unknown arithmetic mode {self.mode!r}")
        if self.mode == "quadratic" and not self.d:
            raise InvalidParameter("quadratic mode needs a field discriminant d")
        if self.mode == "float" and not self.eps > 0:
            raise InvalidParameter("float mode needs eps > 0")

    @property
    def exact(self) -> bool:
        return self.mode != "float"

    def coerce(self, v):
        if self.mode == "float":
            return float(v if not isinstance(v, str) else parse_exact(v))
        x = parse_exact(v)
        if isinstance(x, QuadraticNumber):
            if self.mode != "quadratic" or x.d != self.d:
                raise InvalidParameter(f"{v!r} is not in the configured field")
        return x

    def zero(self):
        return 0.0 if self.mode == "float" else Fraction(0)


@dataclass(frozen=True)
class AffineMap:
    linear: tuple
    translation: tuple

    @classmethod
    def identity(cls, dim: int, one=Fraction(1), zero=Fraction(0)) -> "AffineMap":
        return cls(tuple(tuple(one if i == j else zero for j in range(dim)) for i in range(dim)),
                   tuple(zero for _ in range(dim)))

    @property
    def dim(self) -> int:
        return len(self.translation)

    def __call__(self, p):
        return tuple(geo.dot(row, p) + t for row, t in zip(self.linear, self.translation))

    def after(self, inner: "AffineMap") -> "AffineMap":
        """self o inner."""
        return AffineMap(geo.mat_mul(self.linear, inner.linear),
                         tuple(a + b for a, b in zip(geo.mat_vec(self.linear, inner.translation),
                                                     self.translation)))

    def fingerprint(self):
        return (self.linear, self.translation)

    def det_sign(self) -> int:
        A = self.linear
        if self.dim == 1:
            d = A[0][0]
        elif self.dim == 2:
            d = A[0][0] * A[1][1] - A[0][1] * A[1][0]
        else:
            d = _det(A)
        return (d > 0) - (d < 0)


def _det(A):
    n = len(A)
    M = [list(r) for r in A]
    sign, det = 1, Fraction(1)
    for c in range(n):
        p = next((r for r in range(c, n) if M[r][c] != 0), None)
        if p is None:
            return Fraction(0)
        if p != c:
            M[c], M[p] = M[p], M[c]
            sign = -sign
        det = det * M[c][c]
        for r in range(c + 1, n):
            f = M[r][c] / M[c][c]
            M[r] = [x - f * y for x, y in zip(M[r], M[c])]
    return det * sign


@dataclass(frozen=True)
class ContractiveMap:
    """Similitude z -> A z + t with A^T A = ratio^2 I (reflections allowed)."""

    affine: AffineMap
    ratio_sq: object
    translation_error: tuple = ()

    @classmethod
    def similitude(cls, linear, translation, translation_error=None, eps: float | None = None):
        A = tuple(tuple(row) for row in linear)
        t = tuple(translation)
        dim = len(t)
        if len(A) != dim or any(len(r) != dim for r in A):
            raise InvalidParameter("linear part and translation dimensions disagree")
        AtA = geo.mat_mul(tuple(zip(*A)), A)
        r2 = AtA[0][0]
        for i in range(dim):
            for j in range(dim):
                want = r2 if i == j else 0
                ok = abs(AtA[i][j] - want) <= eps if eps else AtA[i][j] == want
                if not ok:
                    raise InvalidParameter("linear part is not a scaled orthogonal matrix")
        if not 0 < r2 < 1:
            raise InvalidParameter(f"contraction ratio^2 {r2} not in (0, 1)")
        err = tuple(Fraction(e) for e in translation_error) if translation_error else tuple(Fraction(0) for _ in t)
        return cls(AffineMap(A, t), r2, err)

    @property
    def ratio(self) -> float:
        return math.sqrt(float(self.ratio_sq))


@dataclass(frozen=True)
class Coding:
    """Eventually periodic infinite word pre . per per per ..."""

    pre: tuple
    per: tuple

    @classmethod
    def make(cls, pre, per) -> "Coding":
        pre, per = tuple(pre), tuple(per)
        if not per:
            raise InvalidParameter("period must be nonempty")
        n = len(per)
        for k in range(1, n + 1):
            if n % k == 0 and per[:k] * (n // k) == per:
                per = per[:k]
                break
        while pre and pre[-1] == per[-1]:
            pre = pre[:-1]
            per = (per[-1],) + per[:-1]
        return cls(pre, per)

    def shift(self) -> "Coding":
        if self.pre:
            return Coding.make(self.pre[1:], self.per)
        return Coding.make((), self.per[1:] + self.per[:1])

    def prefix(self, n: int) -> Word:
        out = list(self.pre[:n])
        while len(out) < n:
            out.extend(self.per)
        return tuple(out[:n])

    def prepend(self, w) -> "Coding":
        return Coding.make(tuple(w) + self.pre, self.per)

    def sort_key(self):
        n = len(self.pre) + 2 * len(self.per) + 2
        return (self.prefix(n), len(self.pre), self.per)

    def __str__(self):
        return f"{word_str(self.pre) if self.pre else ''}({word_str(self.per)})"


@dataclass(frozen=True)
class CriticalData:
    critical: tuple            # Codings
    post_critical: tuple       # Codings
    boundary: tuple            # V_0 points, ordered by least coding
    boundary_codings: tuple    # least coding per V_0 point
    certificate: dict = field(default_factory=dict, compare=False)

    @property
    def n_critical(self) -> int:
        return len(self.critical)


class IndexMap:
    """Common interface: words -> CellHandle."""

    name: str = "system"
    dimension: int
    alphabet: int
    arithmetic: Arithmetic
    cell_model: str = "attractor"

    def cell(self, word: Word) -> "CellHandle":
        raise NotImplementedError

    def children_words(self, word: Word):
        return [tuple(word) + (j,) for j in range(1, self.alphabet + 1)]

    @property
    def pcf(self) -> CriticalData | None:
        return None


class ContractionSystem(IndexMap):
    def __init__(self, maps, invariant_region, arithmetic: Arithmetic | None = None,
                 cell_model: str = "attractor", name: str = "system", check: bool = True):
        self.maps = tuple(maps)
        if len(self.maps) < 2:
            raise InvalidParameter("need at least two maps")
        self.arithmetic = arithmetic or Arithmetic()
        self.dimension = self.maps[0].affine.dim
        self.alphabet = len(self.maps)
        if cell_model not in ("attractor", "index"):
            raise InvalidParameter(f"unknown cell model {cell_model!r}")
        self.cell_model = cell_model
        self.name = name
        pts = tuple(tuple(p) for p in invariant_region)
        if self.dimension == 2 and len(pts) >= 3:
            pts = geo.ccw(pts)
        self.region = pts
        self.region_box = geo.bounding_box(pts)
        self._cells: dict = {}
        self._pcf: CriticalData | None = None
        self._det = tuple(m.affine.det_sign() for m in self.maps)
        self.has_error = any(any(e != 0 for e in m.translation_error) for m in self.maps)
        if check:
            self.check_invariance()

    # -- construction checks --------------------------------------------
    def check_invariance(self):
        eps = None if self.arithmetic.exact else self.arithmetic.eps
        for j, m in enumerate(self.maps, start=1):
            for p in self.region:
                q = m.affine(p)
                if self.uses_polygons():
                    ok = geo.point_in_polygon(q, self.region) if eps is None else \
                        geo.polygon_dist_sq([q], self.region) <= eps * eps
                else:
                    lo, hi = self.region_box
                    ok = all(lo[i] - (eps or 0) <= q[i] <= hi[i] + (eps or 0) for i in range(self.dimension))
                if not ok:
                    raise InvalidParameter(f"map {j} sends region point {p} outside the region")

    def uses_polygons(self) -> bool:
        return self.dimension == 2 and len(self.region) >= 3 and not self.has_error

    # -- composition ----------------------------------------------------
    def compose(self, word: Word) -> "CellHandle":
        return self.cell(word)

    def cell(self, word: Word) -> "CellHandle":
        word = tuple(word)
        c = self._cells.get(word)
        if c is not None:
            return c
        for j in word:
            if not 1 <= j <= self.alphabet:
                raise InvalidParameter(f"symbol {j} outside 1..{self.alphabet}")
        if not word:
            one = Fraction(1) if self.arithmetic.exact else 1.0
            zero = self.arithmetic.zero()
            aff = AffineMap.identity(self.dimension, one, zero)
            c = CellHandle(self, word, aff, one, tuple(Fraction(0) for _ in range(self.dimension)), 1)
        else:
            parent = self.cell(word[:-1])
            m = self.maps[word[-1] - 1]
            aff = parent.map.after(m.affine)
            ratio_sq = parent.ratio_sq * m.ratio_sq
            if not self.arithmetic.exact and ratio_sq < FLOAT_RATIO_FLOOR:
                raise DepthLimitError(f"float ratio underflow at depth {len(word)}")
            if self.has_error:
                absA = tuple(tuple(abs(v) for v in row) for row in parent.map.linear)
                extra = geo.mat_vec(absA, m.translation_error)
                err = tuple(a + b for a, b in zip(parent.error, extra))
            else:
                err = parent.error
            c = CellHandle(self, word, aff, ratio_sq, err, parent.orientation * self._det[word[-1] - 1])
        self._cells[word] = c
        return c

    def clear_cache(self):
        self._cells.clear()

    # -- attractor points -----------------------------------------------
    @cached_property
    def fixed_points(self) -> tuple:
        out = []
        for m in self.maps:
            out.append(fixed_point(m.affine))
        return tuple(out)

    @cached_property
    def base_sample(self) -> tuple:
        """Fixed points and their images to depth 2, deduplicated, in a stable order."""
        seen = {}
        for p in self.fixed_points:
            seen.setdefault(p, None)
        for w in itertools.chain(itertools.product(range(1, self.alphabet + 1), repeat=1),
                                 itertools.product(range(1, self.alphabet + 1), repeat=2)):
            aff = self.cell(w).map
            for p in self.fixed_points:
                seen.setdefault(aff(p), None)
        return tuple(seen)

    def point_of(self, coding: Coding):
        """The attractor point with the given eventually periodic coding."""
        fp = fixed_point(self.cell(coding.per).map)
        return self.cell(coding.pre).map(fp)

    # -- p.c.f. data ------------------------------------------------------
    @property
    def pcf(self) -> CriticalData | None:
        return self._pcf

    def attach_critical_data(self, data: CriticalData) -> None:
        self._pcf = data


def fixed_point(aff: AffineMap):
    dim = aff.dim
    M = tuple(tuple((1 if i == j else 0) - aff.linear[i][j] for j in range(dim)) for i in range(dim))
    return geo.solve(M, aff.translation)


class CellHandle:
    """A composed cell: map S_x, outer region, inner sample and position error."""

    __slots__ = ("system", "word", "map", "ratio_sq", "error", "orientation", "__dict__")

    def __init__(self, system, word, aff, ratio_sq, error, orientation):
        self.system = system
        self.word = word
        self.map = aff
        self.ratio_sq = ratio_sq
        self.error = error
        self.orientation = orientation

    def __repr__(self):
        return f"CellHandle({self.system.name}, {word_str(self.word)})"

    @property
    def level(self) -> int:
        return len(self.word)

    @cached_property
    def outer(self) -> tuple:
        pts = tuple(self.map(p) for p in self.system.region)
        if self.system.uses_polygons() and self.orientation < 0:
            pts = pts[::-1]
        return pts

    @cached_property
    def box(self):
        return geo.bounding_box(self.outer)

    @cached_property
    def inner(self) -> tuple:
        if self.system.cell_model == "index":
            return self.outer
        return tuple(self.map(p) for p in self.system.base_sample)

    @cached_property
    def vertex_images(self) -> frozenset:
        data = self.system.pcf
        if data is None:
            raise InvalidParameter("system has no p.c.f. data attached")
        return frozenset(self.map(p) for p in data.boundary)

    @cached_property
    def diameter_sq(self):
        if self.system.uses_polygons():
            return geo.polygon_diameter_sq(self.outer)
        return geo.box_diameter_sq(self.box)

    @property
    def diameter(self) -> float:
        return math.sqrt(float(self.diameter_sq))

    @property
    def ratio(self) -> float:
        return math.sqrt(float(self.ratio_sq)) if self.ratio_sq is not None else float("nan")

    @property
    def has_error(self) -> bool:
        return any(e != 0 for e in self.error)

    def children(self):
        return [self.system.cell(w) for w in self.system.children_words(self.word)]


# -- rectangle partitions -------------------------------------------------

class RectanglePartition(IndexMap):
    """Binary partition of the unit square halving y on listed steps and x otherwise.

    ``y_steps`` is a predicate on the 1-based step number; symbol 1 keeps the
    lower/left half and symbol 2 the upper/right half.
    """

    def __init__(self, y_steps, name: str = "partition"):
        self.y_steps = y_steps
        self.name = name
        self.dimension = 2
        self.alphabet = 2
        self.arithmetic = Arithmetic()
        self.cell_model = "index"
        self._cells: dict = {}

    def uses_polygons(self) -> bool:
        return False

    @property
    def has_error(self) -> bool:
        return False

    def rectangle(self, word: Word):
        x0, x1, y0, y1 = Fraction(0), Fraction(1), Fraction(0), Fraction(1)
        for step, sym in enumerate(word, start=1):
            if self.y_steps(step):
                mid = (y0 + y1) / 2
                y0, y1 = (y0, mid) if sym == 1 else (mid, y1)
            else:
                mid = (x0 + x1) / 2
                x0, x1 = (x0, mid) if sym == 1 else (mid, x1)
        return (x0, y0), (x1, y1)

    def cell(self, word: Word) -> "RectCell":
        word = tuple(word)
        c = self._cells.get(word)
        if c is None:
            c = RectCell(self, word)
            self._cells[word] = c
        return c


class RectCell(CellHandle):
    def __init__(self, system, word):
        lo, hi = system.rectangle(word)
        super().__init__(system, word, None, None, (Fraction(0), Fraction(0)), 1)
        self.__dict__["box"] = (lo, hi)

    @cached_property
    def outer(self):
        (x0, y0), (x1, y1) = self.box
        return ((x0, y0), (x1, y0), (x1, y1), (x0, y1))


def triangular_steps(step: int) -> bool:
    """True when step is a triangular number l(l+1)/2."""
    l = (math.isqrt(8 * step + 1) - 1) // 2
    return l * (l + 1) // 2 == step


# -- predicates -------------------------------------------------------------

@dataclass(frozen=True)
class IntersectResult:
    verdict: str           # yes | no | undecided
    gap_lo_sq: object = 0
    gap_hi_sq: object = 0

    def __bool__(self):
        return self.verdict == "yes"

    @property
    def gap(self) -> tuple[float, float]:
        return (math.sqrt(float(self.gap_lo_sq)), math.sqrt(float(self.gap_hi_sq)))


@dataclass(frozen=True)
class DistanceInterval:
    lo_sq: object
    hi_sq: object

    @property
    def lo(self) -> float:
        return math.sqrt(float(self.lo_sq))

    @property
    def hi(self) -> float:
        return math.sqrt(float(self.hi_sq))

    def exceeds(self, t) -> bool:
        """Certainly > t (t >= 0, exact)."""
        return self.lo_sq > t * t

    def within(self, t) -> bool:
        """Certainly <= t."""
        return self.hi_sq <= t * t


def _same_system(a: CellHandle, b: CellHandle):
    if a.system is not b.system:
        raise InvalidParameter("cells come from different systems")


def _box_gap_interval(a: CellHandle, b: CellHandle):
    """(lo_sq, hi_sq) of the distance between two boxes displaced by their errors."""
    lo = hi = Fraction(0)
    for i in range(len(a.box[0])):
        g = geo.box_gap(a.box, b.box, i)
        e = a.error[i] + b.error[i]
        lg = g - e
        if lg > 0:
            lo = lo + lg * lg
        hg = g + e if g > 0 else e + g  # overlap shrinks by at most e
        if hg > 0:
            hi = hi + hg * hg
    return lo, hi


def outer_distance(a: CellHandle, b: CellHandle):
    """(lo_sq, hi_sq) bounds for the distance between the two outer regions."""
    if a.system.uses_polygons() and not (a.has_error or b.has_error):
        d = geo.polygon_dist_sq(a.outer, b.outer)
        return d, d
    if a.has_error or b.has_error:
        return _box_gap_interval(a, b)
    if a.system.dimension == 2 and len(a.outer) >= 3 and a.system.cell_model != "index":
        d = geo.polygon_dist_sq(geo.ccw(a.outer), geo.ccw(b.outer))
        return d, d
    d = geo.box_dist_sq(a.box, b.box)
    return d, d


def _inner_hi_sq(a: CellHandle, b: CellHandle):
    best = None
    err = [x + y for x, y in zip(a.error, b.error)]
    noerr = all(e == 0 for e in err)
    for p in a.inner:
        for q in b.inner:
            if noerr:
                d = geo.dist_sq(p, q)
            else:
                d = Fraction(0)
                for i in range(len(p)):
                    t = abs(p[i] - q[i]) + err[i]
                    d = d + t * t
            if best is None or d < best:
                best = d
    return best


def _index_decide(a: CellHandle, b: CellHandle, eps_sq) -> IntersectResult:
    lo, hi = outer_distance(a, b)
    if eps_sq:
        if hi <= eps_sq:
            return IntersectResult("yes", lo, hi)
        if lo > eps_sq:
            return IntersectResult("no", lo, hi)
        return IntersectResult("undecided", lo, hi)
    if hi == 0 and _index_overlap_certain(a, b):
        return IntersectResult("yes", lo, hi)
    if lo > 0:
        return IntersectResult("no", lo, hi)
    return IntersectResult("undecided", lo, hi)


def _index_overlap_certain(a, b) -> bool:
    if not (a.has_error or b.has_error):
        return True
    for i in range(len(a.box[0])):
        if geo.box_gap(a.box, b.box, i) + a.error[i] + b.error[i] > 0:
            return False
    return True


def _strip_common(a: CellHandle, b: CellHandle):
    """Suffix cells and squared ratio of the shared prefix, when translation errors are present.

    S_p is a similitude, so S_p(A) and S_p(B) meet iff A and B do, and distances scale by r_p.
    Stripping p removes the error of S_p, which both cells share.
    """
    if not (a.has_error or b.has_error):
        return None
    k = 0
    while k < min(len(a.word), len(b.word)) and a.word[k] == b.word[k]:
        k += 1
    if k == 0 or k == len(a.word) or k == len(b.word):
        return None
    sys = a.system
    return sys.cell(a.word[k:]), sys.cell(b.word[k:]), sys.cell(a.word[:k]).ratio_sq


def cells_intersect(a: CellHandle, b: CellHandle, refine: int = 8, use_pcf: bool = True) -> IntersectResult:
    """Decide whether two cells meet: yes, no, or undecided with a gap interval."""
    _same_system(a, b)
    sys = a.system
    if a.word == b.word:
        return IntersectResult("yes")
    stripped = _strip_common(a, b)
    if stripped is not None:
        x, y, r2 = stripped
        res = cells_intersect(x, y, refine, use_pcf)
        if res.gap_lo_sq is None:
            return res
        return IntersectResult(res.verdict, res.gap_lo_sq * r2, res.gap_hi_sq * r2)
    eps_sq = 0 if sys.arithmetic.exact else sys.arithmetic.eps ** 2
    if sys.cell_model == "index":
        return _index_decide(a, b, eps_sq)
    if len(a.word) != len(b.word) and (a.word[: len(b.word)] == b.word or b.word[: len(a.word)] == a.word):
        return IntersectResult("yes")
    if use_pcf and sys.pcf is not None and sys.arithmetic.exact:
        return IntersectResult("yes" if a.vertex_images & b.vertex_images else "no")
    return _attractor_decide(a, b, refine, eps_sq)


def _attractor_decide(a: CellHandle, b: CellHandle, budget: int, eps_sq) -> IntersectResult:
    lo, _ = outer_distance(a, b)
    if lo > eps_sq:
        return IntersectResult("no", lo, lo)
    if not (a.has_error or b.has_error):
        if eps_sq == 0:
            if set(a.inner) & set(b.inner):
                return IntersectResult("yes")
        else:
            if _inner_hi_sq(a, b) <= eps_sq:
                return IntersectResult("yes")
    if budget <= 0:
        return IntersectResult("undecided", lo, _inner_hi_sq(a, b))
    # split the larger cell (both when comparable)
    da, db = a.diameter_sq, b.diameter_sq
    left = a.children() if da * 2 >= db else [a]
    right = b.children() if db * 2 >= da else [b]
    undecided = []
    for x in left:
        for y in right:
            r = _attractor_decide(x, y, budget - 1, eps_sq)
            if r.verdict == "yes":
                return r
            if r.verdict == "undecided":
                undecided.append(r)
    if not undecided:
        return IntersectResult("no", lo, lo)
    glo = min(r.gap_lo_sq for r in undecided)
    ghi = min(r.gap_hi_sq for r in undecided)
    return IntersectResult("undecided", glo, ghi)


def cell_distance(a: CellHandle, b: CellHandle, refine: int = 0) -> DistanceInterval:
    """Certified interval [lo, hi] (squared) for the distance between two cells."""
    _same_system(a, b)
    if a.word == b.word:
        z = Fraction(0) if a.system.arithmetic.exact else 0.0
        return DistanceInterval(z, z)
    stripped = _strip_common(a, b)
    if stripped is not None:
        x, y, r2 = stripped
        d = cell_distance(x, y, refine)
        return DistanceInterval(d.lo_sq * r2, d.hi_sq * r2)
    lo, hi_outer = outer_distance(a, b)
    if a.system.cell_model == "index":
        return DistanceInterval(lo, hi_outer)
    hi = _inner_hi_sq(a, b)
    if refine > 0:
        lows = []
        for x in a.children():
            for y in b.children():
                sub = cell_distance(x, y, refine - 1)
                lows.append(sub.lo_sq)
                if sub.hi_sq < hi:
                    hi = sub.hi_sq
        lo = max(lo, min(lows))
    return DistanceInterval(lo, hi)


# -- critical data -----------------------------------------------------------

def critical_data(sys: ContractionSystem, search_depth: int = 3, check_depth: int = 6) -> CriticalData:
    """Find intersection codings of level-1 cells and close them under the shift.

    Intersection points are searched among preperiodic points S_u(fix S_v)
    with |u|, |v| <= search_depth; a subdivision pass to ``check_depth``
    then confirms that every pair of overlapping sub-cells lies near one of
    the points found.
    """
    if not sys.arithmetic.exact:
        raise InvalidParameter("critical data needs exact arithmetic")
    if sys.has_error:
        raise InvalidParameter("critical data needs exactly known maps")
    N = sys.alphabet
    candidates: dict = {}
    for plen in range(1, search_depth + 1):
        for per in itertools.product(range(1, N + 1), repeat=plen):
            fp = fixed_point(sys.cell(per).map)
            for ulen in range(0, search_depth + 1):
                for u in itertools.product(range(1, N + 1), repeat=ulen):
                    pt = sys.cell(u).map(fp) if u else fp
                    candidates.setdefault(pt, set()).add(Coding.make(u, per))
    images = []
    for i in range(1, N + 1):
        m = sys.maps[i - 1].affine
        img: dict = {}
        for pt, codes in candidates.items():
            img.setdefault(m(pt), set()).update(c.prepend((i,)) for c in codes)
        images.append(img)
    critical: set = set()
    points = set()
    for i in range(N):
        for j in range(i + 1, N):
            for pt in images[i].keys() & images[j].keys():
                points.add(pt)
                critical.update(images[i][pt])
                critical.update(images[j][pt])
    _check_explained(sys, points, check_depth)
    post: set = set()
    frontier = [c.shift() for c in critical]
    while frontier:
        c = frontier.pop()
        if c in post:
            continue
        post.add(c)
        if len(post) > 10_000:
            raise NotPCF("post-critical set exceeds 10000 codings", depth=search_depth)
        frontier.append(c.shift())
    crit = tuple(sorted(critical, key=Coding.sort_key))
    pc = tuple(sorted(post, key=Coding.sort_key))
    least: dict = {}
    for c in pc:
        pt = sys.point_of(c)
        if pt not in least:
            least[pt] = c
    order = sorted(least, key=lambda p: least[p].sort_key())
    cert = {"search_depth": search_depth, "check_depth": check_depth,
            "shift_closed": all(c.shift() in post for c in post)}
    return CriticalData(crit, pc, tuple(order), tuple(least[p] for p in order), cert)


def _check_explained(sys: ContractionSystem, points, depth: int) -> None:
    pts = list(points)
    N = sys.alphabet
    for i in range(1, N + 1):
        for j in range(i + 1, N + 1):
            pairs = [(sys.cell((i,)), sys.cell((j,)))]
            for _ in range(depth):
                nxt = []
                for a, b in pairs:
                    for x in a.children():
                        for y in b.children():
                            lo, _ = outer_distance(x, y)
                            if lo == 0:
                                nxt.append((x, y))
                pairs = nxt
                if len(pairs) > 20_000:
                    raise NotPCF("overlap region too large; cells overlap on a set with interior",
                                 witness=(word_str(pairs[0][0].word), word_str(pairs[0][1].word)))
            for a, b in pairs:
                reach = a.diameter_sq + b.diameter_sq
                reach = reach * 4
                if not any(_dist_to_outer_sq(p, a) <= reach and _dist_to_outer_sq(p, b) <= reach for p in pts):
                    raise NotPCF(f"cells {word_str(a.word)} and {word_str(b.word)} overlap away from every "
                                 "eventually periodic intersection point found",
                                 witness=(word_str(a.word), word_str(b.word)), depth=depth)


def _dist_to_outer_sq(p, c: CellHandle):
    if c.system.uses_polygons():
        return geo.polygon_dist_sq((p,), c.outer)
    return geo.box_dist_sq((p, p), c.box)


def attach_pcf(sys: ContractionSystem, search_depth: int = 3, check_depth: int = 6) -> CriticalData:
    data = critical_data(sys, search_depth, check_depth)
    sys.attach_critical_data(data)
    return data


# -- projections --------------------------------------------------------------

def interior_depth(data: CriticalData, N: int) -> int:
    if data.n_critical <= 1:
        return 1
    return int(math.floor(math.log(data.n_critical) / math.log(N))) + 1


def projection_word(sys: ContractionSystem, x: Word, rule: str = "fixed-point") -> Word:
    """Word whose cell receives the projection point (x itself for the fixed-point rule)."""
    x = tuple(x)
    if rule == "fixed-point":
        return x
    if rule != "interior":
        raise InvalidParameter(f"unknown projection rule {rule!r}")
    data = sys.pcf
    if data is None:
        raise InvalidParameter("interior projection needs p.c.f. data")
    depth = interior_depth(data, sys.alphabet)
    for length in range(depth, depth + 4):
        for w in itertools.product(range(1, sys.alphabet + 1), repeat=length):
            c = sys.cell(w)
            if all(_dist_to_outer_sq(q, c) > 0 for q in data.boundary):
                return x + w
    raise InvalidParameter("no descendant cell avoiding the boundary set was found")


def projection(sys: ContractionSystem, x: Word, rule: str = "fixed-point"):
    """A point of K_x: S_x of the first fixed point, or an interior variant."""
    if isinstance(sys, RectanglePartition):
        # the point coded x111..., the lower-left corner
        return sys.rectangle(tuple(x))[0]
    w = projection_word(sys, x, rule)
    return sys.cell(w).map(sys.fixed_points[0])
