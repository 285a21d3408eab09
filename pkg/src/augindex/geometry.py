"""Exact geometric primitives over any ordered field.

Points are tuples of scalars (Fraction, QuadraticNumber or float).  Convex
polygons are vertex tuples in counter-clockwise order.  Distances are
returned squared so that they stay inside the field.
"""
from __future__ import annotations

from fractions import Fraction

ZERO = Fraction(0)


def sub(p, q):
    return tuple(a - b for a, b in zip(p, q))


def dot(p, q):
    s = ZERO
    for a, b in zip(p, q):
        s = s + a * b
    return s


def norm_sq(p):
    return dot(p, p)


def dist_sq(p, q):
    return norm_sq(sub(p, q))


def cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def mat_vec(A, v):
    return tuple(dot(row, v) for row in A)


def mat_mul(A, B):
    cols = list(zip(*B))
    return tuple(tuple(dot(row, c) for c in cols) for row in A)


def solve(M, b):
    """Gaussian elimination over the scalar field (pivot on first nonzero)."""
    n = len(M)
    A = [list(row) + [b[i]] for i, row in enumerate(M)]
    for col in range(n):
        piv = next((r for r in range(col, n) if A[r][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        A[col], A[piv] = A[piv], A[col]
        inv = 1 / A[col][col] if not isinstance(A[col][col], int) else Fraction(1, A[col][col])
        A[col] = [v * inv for v in A[col]]
        for r in range(n):
            if r != col and A[r][col] != 0:
                f = A[r][col]
                A[r] = [x - f * y for x, y in zip(A[r], A[col])]
    return tuple(A[i][n] for i in range(n))


# -- boxes --------------------------------------------------------------

def bounding_box(points):
    pts = list(points)
    dim = len(pts[0])
    lo = tuple(min(p[i] for p in pts) for i in range(dim))
    hi = tuple(max(p[i] for p in pts) for i in range(dim))
    return lo, hi


def box_gap(a, b, axis):
    """Signed gap along one axis: positive = separated, negative = overlap length."""
    (alo, ahi), (blo, bhi) = a, b
    return max(blo[axis] - ahi[axis], alo[axis] - bhi[axis])


def box_dist_sq(a, b):
    s = ZERO
    for i in range(len(a[0])):
        g = box_gap(a, b, i)
        if g > 0:
            s = s + g * g
    return s


def boxes_intersect(a, b) -> bool:
    return all(box_gap(a, b, i) <= 0 for i in range(len(a[0])))


def point_in_box(p, box) -> bool:
    lo, hi = box
    return all(lo[i] <= p[i] <= hi[i] for i in range(len(p)))


def box_diameter_sq(box):
    lo, hi = box
    return dist_sq(lo, hi)


# -- convex polygons ----------------------------------------------------

def signed_area2(poly):
    s = ZERO
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        s = s + x1 * y2 - x2 * y1
    return s


def ccw(poly):
    """Return the polygon in counter-clockwise order."""
    poly = tuple(poly)
    return poly if signed_area2(poly) >= 0 else poly[::-1]


def point_in_polygon(p, poly) -> bool:
    """Closed containment for a convex ccw polygon (degenerate segments allowed)."""
    n = len(poly)
    if n == 1:
        return tuple(p) == tuple(poly[0])
    if n == 2:
        return point_segment_dist_sq(p, poly[0], poly[1]) == 0
    return all(cross(poly[i], poly[(i + 1) % n], p) >= 0 for i in range(n))


def _separating_axis(P, Q) -> bool:
    """True if some edge of P is a strict separating line for Q."""
    n = len(P)
    for i in range(n):
        a, b = P[i], P[(i + 1) % n]
        if all(cross(a, b, q) < 0 for q in Q):
            return True
    return False


def polygons_intersect(P, Q) -> bool:
    """Closed intersection test for convex ccw polygons with >= 3 vertices."""
    if len(P) < 3 or len(Q) < 3:
        return polygon_dist_sq(P, Q) == 0
    return not (_separating_axis(P, Q) or _separating_axis(Q, P))


def point_segment_dist_sq(p, a, b):
    ab = sub(b, a)
    ap = sub(p, a)
    den = norm_sq(ab)
    if den == 0:
        return norm_sq(ap)
    t = dot(ap, ab)
    if t <= 0:
        return norm_sq(ap)
    if t >= den:
        return dist_sq(p, b)
    # |ap|^2 - t^2/den stays exact
    return norm_sq(ap) - t * t / den


def _edges(P):
    n = len(P)
    if n == 1:
        return [(P[0], P[0])]
    return [(P[i], P[(i + 1) % n]) for i in range(n)]


def polygon_dist_sq(P, Q):
    """Squared distance between convex polygons (0 when they meet)."""
    if len(P) >= 3 and len(Q) >= 3 and polygons_intersect(P, Q):
        return ZERO
    if len(P) >= 3 and any(point_in_polygon(q, P) for q in Q):
        return ZERO
    if len(Q) >= 3 and any(point_in_polygon(p, Q) for p in P):
        return ZERO
    if len(P) == 2 and len(Q) == 2 and _segments_cross(P, Q):
        return ZERO
    best = None
    for p in P:
        for a, b in _edges(Q):
            d = point_segment_dist_sq(p, a, b)
            if best is None or d < best:
                best = d
    for q in Q:
        for a, b in _edges(P):
            d = point_segment_dist_sq(q, a, b)
            if d < best:
                best = d
    return best


def _segments_cross(S, T) -> bool:
    a, b = S
    c, d = T
    d1, d2 = cross(a, b, c), cross(a, b, d)
    d3, d4 = cross(c, d, a), cross(c, d, b)
    return ((d1 > 0 > d2) or (d1 < 0 < d2)) and ((d3 > 0 > d4) or (d3 < 0 < d4))


def polygon_diameter_sq(P):
    best = ZERO
    for i, p in enumerate(P):
        for q in P[i + 1:]:
            d = dist_sq(p, q)
            if d > best:
                best = d
    return best
