"""Error-controlled real numbers.

Every coordinate of alpha is one of three :data:`RealSpec` variants. They are
lifted into :class:`Real`, an exact element of ``Q(sqrt(m1), sqrt(m2), ...)``
(a :class:`SurdSum`) plus an optional rational uncertainty radius carried by
decimal literals. Signs of exact values are always decidable: zero is detected
symbolically (square roots of distinct squarefree integers are linearly
independent over Q) and any nonzero value separates from zero once the
enclosure is fine enough.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from math import floor, gcd, isqrt
from typing import Iterator, NamedTuple, Sequence, Union

from .errors import (
    DimensionMismatch,
    NonsquareViolation,
    ParseError,
    PrecisionExhausted,
    ZeroDenominator,
)

Number = Union[int, Fraction]


@dataclass(frozen=True)
class PrecisionBudget:
    start_bits: int = 128
    max_bits: int = 4096
    escalation_factor: int = 2

    def __post_init__(self):
        if self.start_bits < 1 or self.max_bits < 1:
            raise ValueError("precision bits must be positive")
        if self.start_bits > self.max_bits:
            raise ValueError("start_bits must not exceed max_bits")
        if self.escalation_factor < 2:
            raise ValueError("escalation_factor must be >= 2")

    def schedule(self) -> Iterator[int]:
        """Bit counts to try, ending at ``max_bits``."""
        bits = self.start_bits
        while bits < self.max_bits:
            yield bits
            bits *= self.escalation_factor
        yield self.max_bits


DEFAULT_BUDGET = PrecisionBudget()


def squarefree_split(d: int) -> tuple[int, int]:
    """Return ``(k, m)`` with ``d == k*k*m`` and ``m`` squarefree."""
    if d <= 0:
        raise ValueError("radicand must be positive")
    k, m = 1, d
    f = 2
    while f * f <= m:
        while m % (f * f) == 0:
            m //= f * f
            k *= f
        f += 1
    return k, m


class SurdSum:
    """Exact ``r + sum(c_m * sqrt(m))`` with distinct squarefree ``m > 1``.

    ``terms`` maps radicand to rational coefficient; radicand ``1`` holds the
    rational part. Instances are treated as immutable.
    """

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = {m: Fraction(c) for m, c in (terms or {}).items() if c}

    @classmethod
    def rational(cls, x: Number) -> "SurdSum":
        return cls({1: Fraction(x)})

    @classmethod
    def sqrt(cls, d: int, coeff: Number = 1) -> "SurdSum":
        k, m = squarefree_split(d)
        return cls({m: Fraction(coeff) * k})

    def is_zero(self) -> bool:
        return not self.terms

    def is_rational(self) -> bool:
        return all(m == 1 for m in self.terms)

    def rational_part(self) -> Fraction:
        return self.terms.get(1, Fraction(0))

    def _combine(self, other: "SurdSum", sign: int) -> "SurdSum":
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + sign * c
        return SurdSum(out)

    def __add__(self, other):
        return self._combine(_as_surd(other), 1)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(_as_surd(other), -1)

    def __rsub__(self, other):
        return _as_surd(other)._combine(self, -1)

    def __neg__(self):
        return SurdSum({m: -c for m, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return SurdSum({m: c * other for m, c in self.terms.items()})
        other = _as_surd(other)
        out: dict[int, Fraction] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                g = gcd(m1, m2)
                m = (m1 // g) * (m2 // g)
                out[m] = out.get(m, 0) + c1 * c2 * g
        return SurdSum(out)

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = SurdSum.rational(other)
        if not isinstance(other, SurdSum):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __repr__(self):
        parts = []
        for m in sorted(self.terms):
            c = self.terms[m]
            parts.append(str(c) if m == 1 else f"{c}*sqrt({m})")
        return "SurdSum(" + (" + ".join(parts) or "0") + ")"

    def bounds(self, w: int) -> tuple[Fraction, Fraction]:
        """Rational ``lo <= value <= hi`` with width about ``sum|c| * 2**-w``."""
        lo = hi = Fraction(0)
        scale = 1 << w
        for m, c in self.terms.items():
            if m == 1:
                lo += c
                hi += c
                continue
            s = isqrt(m << (2 * w))
            a, b = Fraction(s, scale), Fraction(s + 1, scale)
            if c > 0:
                lo += c * a
                hi += c * b
            else:
                lo += c * b
                hi += c * a
        return lo, hi


def _as_surd(x) -> SurdSum:
    if isinstance(x, SurdSum):
        return x
    if isinstance(x, (int, Fraction)):
        return SurdSum.rational(x)
    raise TypeError(f"cannot use {type(x).__name__} as an exact surd")


class Real:
    """Exact surd centre plus a rational uncertainty radius (0 when exact)."""

    __slots__ = ("center", "radius")

    def __init__(self, center, radius: Number = 0):
        self.center = _as_surd(center)
        self.radius = Fraction(radius)
        if self.radius < 0:
            raise ValueError("radius must be non-negative")

    @property
    def exact(self) -> bool:
        return self.radius == 0

    def is_zero(self) -> bool:
        return self.exact and self.center.is_zero()

    def _magnitude_bound(self) -> Fraction:
        lo, hi = self.center.bounds(32)
        return max(abs(lo), abs(hi)) + self.radius

    def __add__(self, other):
        other = as_real(other)
        return Real(self.center + other.center, self.radius + other.radius)

    __radd__ = __add__

    def __sub__(self, other):
        other = as_real(other)
        return Real(self.center - other.center, self.radius + other.radius)

    def __rsub__(self, other):
        return as_real(other) - self

    def __neg__(self):
        return Real(-self.center, self.radius)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return Real(self.center * other, self.radius * abs(Fraction(other)))
        other = as_real(other)
        radius = Fraction(0)
        if self.radius or other.radius:
            radius = (
                self._magnitude_bound() * other.radius
                + other._magnitude_bound() * self.radius
                + self.radius * other.radius
            )
        return Real(self.center * other.center, radius)

    __rmul__ = __mul__

    def bounds(self, bits: int) -> tuple[Fraction, Fraction]:
        lo, hi = self.center.bounds(bits)
        return lo - self.radius, hi + self.radius

    def approx(self) -> float:
        lo, hi = self.center.bounds(64)
        return float((lo + hi) / 2)

    def __float__(self):
        return self.approx()

    def __repr__(self):
        if self.exact:
            return f"Real({self.center!r})"
        return f"Real({self.center!r} +/- {self.radius})"

    @classmethod
    def from_spec(cls, spec: "RealSpec") -> "Real":
        return spec.to_real()


def as_real(x) -> Real:
    if isinstance(x, Real):
        return x
    if isinstance(x, (int, Fraction, SurdSum)):
        return Real(x)
    if isinstance(x, (Rational, QuadraticSurd, DecimalLiteral)):
        return x.to_real()
    raise TypeError(f"cannot convert {type(x).__name__} to Real")


# --------------------------------------------------------------------------
# RealSpec variants

_DECIMAL_RE = re.compile(r"^[+-]?\d+(\.\d+)?$")


@dataclass(frozen=True)
class Rational:
    numerator: int
    denominator: int = 1

    def __post_init__(self):
        n, d = int(self.numerator), int(self.denominator)
        if d == 0:
            raise ZeroDenominator("rational with zero denominator")
        if d < 0:
            n, d = -n, -d
        g = gcd(n, d) or 1
        object.__setattr__(self, "numerator", n // g)
        object.__setattr__(self, "denominator", d // g)

    def to_real(self) -> Real:
        return Real(Fraction(self.numerator, self.denominator))

    def render(self) -> str:
        return f"rat:{self.numerator}/{self.denominator}"


@dataclass(frozen=True)
class QuadraticSurd:
    """``(a + b*sqrt(d)) / c``."""

    a: int
    b: int
    d: int
    c: int = 1

    def __post_init__(self):
        a, b, d, c = (int(v) for v in (self.a, self.b, self.d, self.c))
        if c == 0:
            raise ZeroDenominator("quadratic surd with zero denominator")
        if d <= 0:
            raise ValueError("radicand must be a positive integer")
        if isqrt(d) ** 2 == d:
            raise NonsquareViolation(f"radicand {d} is a perfect square")
        if c < 0:
            a, b, c = -a, -b, -c
        g = gcd(gcd(a, b), c)
        object.__setattr__(self, "a", a // g)
        object.__setattr__(self, "b", b // g)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "c", c // g)

    def to_real(self) -> Real:
        return Real(SurdSum.rational(Fraction(self.a, self.c)) + SurdSum.sqrt(self.d, Fraction(self.b, self.c)))

    def render(self) -> str:
        return f"quad:({self.a}+{self.b}*sqrt({self.d}))/{self.c}"


@dataclass(frozen=True)
class DecimalLiteral:
    """A finite decimal known only to its printed digits (and ``precision_bits``)."""

    digits: str
    precision_bits: int

    def __post_init__(self):
        if not _DECIMAL_RE.match(self.digits):
            raise ValueError(f"not a finite decimal: {self.digits!r}")
        if int(self.precision_bits) < 8:
            raise ValueError("precision_bits must be >= 8")
        object.__setattr__(self, "precision_bits", int(self.precision_bits))

    @property
    def value(self) -> Fraction:
        return Fraction(self.digits)

    @property
    def uncertainty(self) -> Fraction:
        frac = self.digits.partition(".")[2]
        return max(Fraction(1, 10 ** len(frac)), Fraction(1, 1 << self.precision_bits))

    def to_real(self) -> Real:
        return Real(self.value, self.uncertainty)

    def render(self) -> str:
        return f"dec:{self.digits}@{self.precision_bits}"


RealSpec = Union[Rational, QuadraticSurd, DecimalLiteral]

_RAT_RE = re.compile(r"rat:([+-]?\d+)/(\d+)")
_QUAD_RE = re.compile(r"quad:\(([+-]?\d+)\+([+-]?\d+)\*sqrt\((\d+)\)\)/(\d+)")
_DEC_RE = re.compile(r"dec:([+-]?\d+(?:\.\d+)?)@(\d+)")


def parse_component(text: str, offset: int = 0) -> RealSpec:
    """Parse one ``rat:``/``quad:``/``dec:`` component of an alpha-spec."""
    s = text.strip()
    pos = offset + (len(text) - len(text.lstrip()))
    try:
        if m := _RAT_RE.fullmatch(s):
            if int(m.group(2)) == 0:
                raise ParseError("zero denominator", pos + m.start(2))
            return Rational(int(m.group(1)), int(m.group(2)))
        if m := _QUAD_RE.fullmatch(s):
            a, b, d, c = (int(g) for g in m.groups())
            if c == 0:
                raise ParseError("zero denominator", pos + m.start(4))
            if d == 0 or isqrt(d) ** 2 == d:
                raise ParseError(f"radicand {d} is a perfect square", pos + m.start(3))
            return QuadraticSurd(a, b, d, c)
        if m := _DEC_RE.fullmatch(s):
            bits = int(m.group(2))
            if bits < 8:
                raise ParseError("precision bits must be >= 8", pos + m.start(2))
            return DecimalLiteral(m.group(1), bits)
    except ParseError:
        raise
    except ValueError as exc:
        raise ParseError(str(exc), pos) from exc
    raise ParseError(f"unrecognised component {s!r}", pos)


def render_component(spec: RealSpec) -> str:
    return spec.render()


# --------------------------------------------------------------------------
# sign, floor, nearest integer

def sign(x, budget: PrecisionBudget = DEFAULT_BUDGET) -> int:
    """Rigorous sign of ``x``.

    Exact values always get an answer (refinement continues past
    ``max_bits`` once symbolic zero has been ruled out). Inexact values raise
    :class:`PrecisionExhausted` when their uncertainty straddles zero.
    """
    x = as_real(x)
    if x.exact:
        if x.center.is_zero():
            return 0
        if x.center.is_rational():
            return 1 if x.center.rational_part() > 0 else -1
    bits = budget.start_bits
    while True:
        lo, hi = x.bounds(bits)
        if lo > 0:
            return 1
        if hi < 0:
            return -1
        if bits >= budget.max_bits and not x.exact:
            raise PrecisionExhausted(
                f"cannot decide sign at {budget.max_bits} bits; supply more digits"
            )
        bits = bits * budget.escalation_factor
        if not x.exact:
            bits = min(bits, budget.max_bits)


def floor_exact(x, budget: PrecisionBudget = DEFAULT_BUDGET) -> tuple[int, bool]:
    """Return ``(floor(x), x is that integer)``."""
    x = as_real(x)
    if x.exact and x.center.is_rational():
        r = x.center.rational_part()
        f = floor(r)
        return f, r == f
    bits = max(budget.start_bits, 64)
    while True:
        lo, hi = x.bounds(bits)
        a, b = floor(lo), floor(hi)
        if a == b:
            # a <= lo <= x <= hi < a + 1
            return a, x.exact and lo == a and (x - a).is_zero()
        if x.exact and b - a == 1 and (x - b).is_zero():
            return b, True
        if not x.exact and bits >= budget.max_bits:
            raise PrecisionExhausted(
                f"cannot locate integer part at {budget.max_bits} bits; supply more digits"
            )
        bits = bits * budget.escalation_factor
        if not x.exact:
            bits = min(bits, budget.max_bits)


class NearestDistance(NamedTuple):
    """Exact ``||x||`` together with the nearest integer.

    On a half-integer tie ``nearest`` is the lower of the two candidates.
    """

    dist: Real
    nearest: int
    tie: bool


def nearest_distance(x, budget: PrecisionBudget = DEFAULT_BUDGET) -> NearestDistance:
    x = as_real(x)
    n, on_grid = floor_exact(x + Fraction(1, 2), budget)
    if on_grid:
        return NearestDistance(Real(Fraction(1, 2)), n - 1, True)
    delta = x - n
    s = sign(delta, budget)
    return NearestDistance(delta if s >= 0 else -delta, n, False)


# --------------------------------------------------------------------------
# intervals

@dataclass(frozen=True)
class IntervalValue:
    """``[midpoint - radius, midpoint + radius]`` with dyadic endpoints."""

    midpoint: Fraction
    radius: Fraction
    precision_bits: int

    @classmethod
    def from_bounds(cls, lo: Fraction, hi: Fraction, precision_bits: int) -> "IntervalValue":
        return cls((lo + hi) / 2, (hi - lo) / 2, precision_bits)

    @property
    def lo(self) -> Fraction:
        return self.midpoint - self.radius

    @property
    def hi(self) -> Fraction:
        return self.midpoint + self.radius

    @property
    def width(self) -> Fraction:
        return 2 * self.radius

    def contains(self, value) -> bool:
        return self.lo <= Fraction(value) <= self.hi

    def contains_interval(self, other: "IntervalValue") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def __float__(self):
        return float(self.midpoint)


def _dyadic_ceil(x: Fraction, k: int) -> Fraction:
    return Fraction(-((-x.numerator << k) // x.denominator), 1 << k)


def enclose(x, bits: int, budget: PrecisionBudget = DEFAULT_BUDGET) -> IntervalValue:
    """Dyadic enclosure of ``x`` on the grid ``2**-bits``.

    Exact values get ``[F, F+1] * 2**-bits`` with ``F = floor(x * 2**bits)``
    (or the point itself when it lies on the grid), so raising ``bits``
    always yields a nested interval. Inexact values add their radius, rounded
    up to the grid.
    """
    if bits < 1:
        raise ValueError("bits must be positive")
    x = as_real(x)
    scale = 1 << bits
    if x.center.is_rational():
        c = x.center.rational_part()
        f, rem = divmod(c.numerator << bits, c.denominator)
        on_grid = rem == 0
    else:
        f, on_grid = floor_exact(Real(x.center) * scale, budget)
    lo = Fraction(f, scale)
    hi = lo if on_grid else Fraction(f + 1, scale)
    if x.exact:
        return IntervalValue.from_bounds(lo, hi, bits)
    r = _dyadic_ceil(x.radius, bits + 1)
    iv = IntervalValue.from_bounds(lo - r, hi + r, bits)
    scale_ref = max(Fraction(1), abs(iv.midpoint))
    p = bits
    while p > 1 and iv.radius > scale_ref * Fraction(2, 1 << p):
        p -= 1
    return IntervalValue(iv.midpoint, iv.radius, p)


def eval_real(spec: RealSpec, bits: int, budget: PrecisionBudget = DEFAULT_BUDGET) -> IntervalValue:
    if bits < 8:
        raise ValueError("bits must be >= 8")
    return enclose(as_real(spec), bits, budget)


class NearestIntInterval(NamedTuple):
    interval: IntervalValue
    nearest_int: int | None
    tie: bool


def _dist_frac(x: Fraction, n: int) -> Fraction:
    return abs(x - n)


def dist_nearest_int(x: IntervalValue) -> NearestIntInterval:
    """Enclosure of ``||x||`` over the interval ``x``.

    ``tie`` is raised whenever the interval touches a half-integer, in which
    case the nearest integer is ambiguous and reported as ``None``.
    """
    lo, hi = x.lo, x.hi
    half = Fraction(1, 2)
    touches_half = floor(hi - half) >= -floor(-(lo - half))  # some j+1/2 in [lo, hi]
    contains_int = floor(hi) >= -floor(-lo)

    def dist(v):
        return abs(v - floor(v + half))

    d_lo, d_hi = dist(lo), dist(hi)
    upper = half if touches_half else max(d_lo, d_hi)
    lower = Fraction(0) if contains_int else min(d_lo, d_hi)
    iv = IntervalValue.from_bounds(lower, upper, x.precision_bits)
    if touches_half:
        return NearestIntInterval(iv, None, True)
    return NearestIntInterval(iv, floor(lo + half), False)


def inner_product(alpha, q: Sequence[int], bits: int, budget: PrecisionBudget = DEFAULT_BUDGET) -> IntervalValue:
    """Enclosure of ``alpha . q``; ``alpha`` is an AlphaVector or a sequence of reals."""
    return enclose(dot(alpha, q), bits, budget)


def dot(alpha, q: Sequence[int]) -> Real:
    reals = getattr(alpha, "reals", None)
    if reals is None:
        reals = [as_real(a) for a in alpha]
    if len(reals) != len(q):
        raise DimensionMismatch(f"alpha has dimension {len(reals)}, q has {len(q)}")
    total = Real(0)
    for a, qi in zip(reals, q):
        if qi:
            total = total + a * int(qi)
    return total


# --------------------------------------------------------------------------
# decisions

_OPS = {
    "<": lambda s: s < 0,
    "<=": lambda s: s <= 0,
    ">": lambda s: s > 0,
    ">=": lambda s: s >= 0,
    "==": lambda s: s == 0,
    "!=": lambda s: s != 0,
}


def decide(lhs, op: str, rhs, budget: PrecisionBudget = DEFAULT_BUDGET) -> bool:
    """Rigorously decide ``lhs <op> rhs``.

    Both sides may be ints, Fractions, RealSpecs or :class:`Real`. Raises
    :class:`PrecisionExhausted` only when inexact inputs cannot be separated.
    """
    try:
        test = _OPS[op]
    except KeyError:
        raise ValueError(f"unknown comparison {op!r}") from None
    return test(sign(as_real(lhs) - as_real(rhs), budget))
