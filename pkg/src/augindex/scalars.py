"""Exact scalars: rationals and elements of real quadratic fields.

Values of the form (a + b*sqrt(d)) / q are stored as integers with a
positive denominator, so equality and ordering are decided exactly.
Python's ``Fraction`` covers the rational case and mixes freely with
``QuadraticNumber``.
"""
from __future__ import annotations

import math
import re
from fractions import Fraction
from numbers import Rational

from .errors import InvalidParameter


def _is_squarefree(d: int) -> bool:
    if d < 2:
        return False
    f = 2
    while f * f <= d:
        if d % (f * f) == 0:
            return False
        f += 1
    return True


class QuadraticNumber:
    """Element (a + b*sqrt(d)) / q of Q(sqrt(d)), d squarefree."""

    __slots__ = ("a", "b", "q", "d")

    def __init__(self, a=0, b=0, d: int = 5, q: int = 1):
        if not _is_squarefree(d):
            raise InvalidParameter(f"field discriminant must be squarefree and > 1, got {d}")
        fa, fb = Fraction(a), Fraction(b)
        den = fa.denominator * fb.denominator // math.gcd(fa.denominator, fb.denominator)
        num_a = fa.numerator * (den // fa.denominator)
        num_b = fb.numerator * (den // fb.denominator)
        self._set(num_a, num_b, den * q, d)

    def _set(self, a: int, b: int, q: int, d: int) -> None:
        if q == 0:
            raise ZeroDivisionError("zero denominator")
        if q < 0:
            a, b, q = -a, -b, -q
        g = math.gcd(math.gcd(a, b), q)
        if g > 1:
            a, b, q = a // g, b // g, q // g
        self.a, self.b, self.q, self.d = a, b, q, d

    @classmethod
    def _raw(cls, a: int, b: int, q: int, d: int) -> "QuadraticNumber":
        obj = cls.__new__(cls)
        obj._set(a, b, q, d)
        return obj

    @classmethod
    def sqrt(cls, d: int) -> "QuadraticNumber":
        return cls._raw(0, 1, 1, d)

    # -- coercion -------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, QuadraticNumber):
            if other.d != self.d:
                raise InvalidParameter(f"mixed quadratic fields Q(sqrt{self.d}) and Q(sqrt{other.d})")
            return other
        if isinstance(other, (int, Rational)):
            f = Fraction(other)
            return QuadraticNumber._raw(f.numerator, 0, f.denominator, self.d)
        return NotImplemented

    @property
    def rational_part(self) -> Fraction:
        return Fraction(self.a, self.q)

    @property
    def irrational_part(self) -> Fraction:
        return Fraction(self.b, self.q)

    def is_rational(self) -> bool:
        return self.b == 0

    def conjugate(self) -> "QuadraticNumber":
        return QuadraticNumber._raw(self.a, -self.b, self.q, self.d)

    # -- arithmetic -----------------------------------------------------
    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return QuadraticNumber._raw(self.a * o.q + o.a * self.q, self.b * o.q + o.b * self.q,
                                    self.q * o.q, self.d)

    __radd__ = __add__

    def __neg__(self):
        return QuadraticNumber._raw(-self.a, -self.b, self.q, self.d)

    def __pos__(self):
        return self

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return o + (-self)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return QuadraticNumber._raw(self.a * o.a + self.b * o.b * self.d,
                                    self.a * o.b + self.b * o.a, self.q * o.q, self.d)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        norm = o.a * o.a - o.b * o.b * o.d
        if norm == 0:
            raise ZeroDivisionError("division by zero in quadratic field")
        # multiply by the conjugate of o
        num_a = (self.a * o.a - self.b * o.b * self.d) * o.q
        num_b = (self.b * o.a - self.a * o.b) * o.q
        return QuadraticNumber._raw(num_a, num_b, self.q * norm, self.d)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return o / self

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return 1 / (self ** -n)
        result = QuadraticNumber._raw(1, 0, 1, self.d)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __abs__(self):
        return -self if self.sign() < 0 else self

    # -- ordering -------------------------------------------------------
    def sign(self) -> int:
        a, b = self.a, self.b
        sa = (a > 0) - (a < 0)
        sb = (b > 0) - (b < 0)
        if sa >= 0 and sb >= 0:
            return 1 if (sa or sb) else 0
        if sa <= 0 and sb <= 0:
            return -1
        # opposite signs: compare a^2 with b^2 d
        diff = a * a - b * b * self.d
        return sa if diff > 0 else -sa

    def _cmp(self, other) -> int:
        o = self._coerce(other)
        if o is NotImplemented:
            raise TypeError(f"cannot compare QuadraticNumber with {type(other).__name__}")
        return (self - o).sign()

    def __eq__(self, other):
        if isinstance(other, float):
            return NotImplemented
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self.a * o.q == o.a * self.q and self.b * o.q == o.b * self.q

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __hash__(self):
        if self.b == 0:
            return hash(Fraction(self.a, self.q))
        return hash((self.a, self.b, self.q, self.d))

    def __bool__(self):
        return self.a != 0 or self.b != 0

    def __float__(self):
        a, b, q, d = self.a, self.b, self.q, self.d
        if b == 0:
            return a / q
        if (a >= 0) == (b >= 0) or a == 0:
            return (a + b * math.sqrt(d)) / q
        # opposite signs: avoid cancellation via a + b*sqrt(d) = (a^2 - b^2 d)/(a - b*sqrt(d))
        return float(Fraction(a * a - b * b * d, q)) / (a - b * math.sqrt(d))

    def __repr__(self):
        return f"QuadraticNumber({self})"

    def __str__(self):
        if self.b == 0:
            return str(Fraction(self.a, self.q))
        sign = "+" if self.b > 0 else "-"
        coeff = "" if abs(self.b) == 1 else str(abs(self.b))
        body = f"{self.a}{sign}{coeff}√{self.d}" if self.a else f"{'-' if self.b < 0 else ''}{coeff}√{self.d}"
        if self.q == 1:
            return body if not self.a else f"({body})"
        return f"({body})/{self.q}"


Scalar = "int | Fraction | QuadraticNumber | float"

_NUM = r"\d+(?:\.\d+)?(?:/\d+)?"
_QUAD = re.compile(
    rf"""^\(?\s*
        (?:(?P<a>[+-]?{_NUM})\s*(?=[+-]))?
        \s*(?P<bs>[+-])?\s*(?P<b>{_NUM})?\s*\*?\s*√\s*(?P<d>\d+)
        \s*\)?\s*(?:/\s*(?P<q>{_NUM}))?\s*$""",
    re.VERBOSE,
)


def parse_exact(text) -> Fraction | QuadraticNumber:
    """Parse "p/q", "0.25", "(a+b√d)/q" or "(a+b*sqrt(d))/q" exactly."""
    if isinstance(text, bool):
        raise InvalidParameter(f"not a number: {text!r}")
    if isinstance(text, (int, Fraction, QuadraticNumber)):
        return text if isinstance(text, QuadraticNumber) else Fraction(text)
    if isinstance(text, float):
        raise InvalidParameter(f"float {text!r} given where an exact value is required; quote it as a string")
    s = str(text).strip().replace("sqrt(", "√(")
    s = re.sub(r"√\((\d+)\)", r"√\1", s)
    if "√" not in s:
        try:
            return Fraction(s.replace(" ", ""))
        except ValueError as exc:
            raise InvalidParameter(f"cannot parse exact number {text!r}") from exc
    m = _QUAD.match(s)
    if not m:
        raise InvalidParameter(f"cannot parse quadratic number {text!r}")
    a = Fraction(m["a"]) if m["a"] else Fraction(0)
    b = Fraction(m["b"]) if m["b"] else Fraction(1)
    if m["bs"] == "-":
        b = -b
    q = Fraction(m["q"]) if m["q"] else Fraction(1)
    return QuadraticNumber(a / q, b / q, int(m["d"]))


def is_exact(value) -> bool:
    """True when value (or every component of a nested tuple) is exact."""
    if isinstance(value, (tuple, list)):
        return all(is_exact(v) for v in value)
    if isinstance(value, bool):
        return True
    return isinstance(value, (int, Fraction, QuadraticNumber))


def to_float(value) -> float:
    return float(value)


def exact_sqrt_upper(x: Fraction, denominator: int = 2**40) -> Fraction:
    """Smallest p/denominator with (p/denominator)^2 >= x; exact when x is a square."""
    x = Fraction(x)
    if x < 0:
        raise InvalidParameter("negative argument to sqrt")
    rn, rd = math.isqrt(x.numerator), math.isqrt(x.denominator)
    if rn * rn == x.numerator and rd * rd == x.denominator:
        return Fraction(rn, rd)
    p = math.isqrt(x.numerator * denominator * denominator // x.denominator)
    while Fraction(p, denominator) ** 2 < x:
        p += 1
    return Fraction(p, denominator)
