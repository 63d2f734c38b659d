"""Reciprocal sums ``S = sum ||alpha . q||**-1`` over boxes, dyadic shells, gap principle."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from . import kernel
from .alpha import AlphaVector
from .errors import InvariantViolation, PairCapExceeded, Resonance
from .phi import PhiTable, compute_phi_table, phi_at
from .realnum import DEFAULT_BUDGET, PrecisionBudget, Real, decide, enclose, sign
from .serialize import to_csv_text, to_json_text


@dataclass(frozen=True)
class BoxSpec:
    radii: tuple[Fraction, ...]

    def __post_init__(self):
        radii = tuple(Fraction(r) for r in self.radii)
        if not radii or any(r <= 0 for r in radii):
            raise ValueError("box radii must be positive")
        object.__setattr__(self, "radii", radii)

    @classmethod
    def cube(cls, Q, n: int) -> "BoxSpec":
        return cls((Fraction(Q),) * n)

    @property
    def n(self) -> int:
        return len(self.radii)

    @property
    def Q(self) -> float:
        """Geometric mean radius."""
        return math.prod(float(r) for r in self.radii) ** (1 / self.n)

    @property
    def is_cube(self) -> bool:
        return len(set(self.radii)) == 1

    @property
    def integer_radii(self) -> tuple[int, ...]:
        return tuple(math.floor(r) for r in self.radii)


@dataclass(frozen=True)
class SumResult:
    box: BoxSpec
    lower: float
    upper: float
    terms: int
    min_fractional_part: float | None
    min_witness: tuple[int, ...] | None

    @property
    def midpoint(self) -> float:
        return (self.lower + self.upper) / 2

    @property
    def radius(self) -> float:
        return (self.upper - self.lower) / 2

    def to_json(self) -> dict:
        return {"radii": [float(r) for r in self.box.radii], "lower": self.lower,
                "upper": self.upper, "terms": self.terms}

    csv_columns = ("radii", "lower", "upper", "midpoint", "radius", "terms")

    def csv_rows(self):
        return [([float(r) for r in self.box.radii], self.lower, self.upper, self.midpoint, self.radius, self.terms)]

    def to_json_text(self) -> str:
        return to_json_text(self.to_json())

    def to_csv_text(self) -> str:
        return to_csv_text(self.csv_columns, self.csv_rows())


def _down(x: float) -> float:
    return float(np.nextafter(x, -np.inf))


def _up(x: float) -> float:
    return float(np.nextafter(x, np.inf))


def _exact_reciprocal_bounds(alpha, q, budget) -> tuple[float, float, float]:
    """``(lo, hi, dist)`` for ``1/||alpha . q||``; raises Resonance on zero."""
    d = alpha.distance(q, budget).dist
    if sign(d, budget) == 0:
        raise Resonance(q)
    bits = 64
    while True:
        iv = enclose(d, bits, budget)
        if iv.lo > 0:
            break
        bits *= 2
    return _down(float(1 / iv.hi)), _up(float(1 / iv.lo)), float(iv.midpoint)


class _SumChunk(NamedTuple):
    lo: list  # arrays of lower reciprocal bounds
    hi: list
    best: tuple | None  # (dist lower bound, dist upper bound, index, q)


def _sum_chunk(alpha, fp, R, start, stop, budget) -> _SumChunk:
    los, his = [], []
    best = None
    for block in kernel.iter_blocks(fp, R, start, stop):
        lo_u = block.dist - block.err
        hi_u = block.dist + block.err
        amb = lo_u <= 0
        safe_lo = np.where(amb, 1, lo_u)
        hf = np.nextafter(hi_u.astype(np.float64), np.inf)
        lf = np.nextafter(safe_lo.astype(np.float64), -np.inf)
        r_lo = np.ldexp(np.nextafter(1.0 / hf, -np.inf), block.bits)
        r_hi = np.ldexp(np.nextafter(1.0 / lf, np.inf), block.bits)
        dlo, dhi = block.lo_float(), block.hi_float()
        for i in np.flatnonzero(amb):
            q = kernel.row(block.q[i])
            r_lo[i], r_hi[i], d = _exact_reciprocal_bounds(alpha, q, budget)
            dlo[i] = dhi[i] = d
        los.append(r_lo)
        his.append(r_hi)
        if len(dhi):
            # every row that might still be the minimum
            for j in np.flatnonzero(dlo <= dhi.min()):
                c = (float(dlo[j]), float(dhi[j]), block.start + int(j), kernel.row(block.q[j]))
                best = _pick_min(alpha, best, c, budget)
    return _SumChunk(los, his, best)


def _pick_min(alpha, a, b, budget):
    """Smaller of two ``(lo, hi, index, q)`` distance candidates; ties go to the lower index."""
    if a is None:
        return b
    if b is None:
        return a
    if a[2] == b[2]:
        return a
    first, second = (a, b) if a[2] < b[2] else (b, a)
    if first[1] < second[0]:
        return first
    if second[1] < first[0]:
        return second
    d1 = alpha.distance(first[3], budget).dist
    d2 = alpha.distance(second[3], budget).dist
    return second if decide(d2, "<", d1, budget) else first


def sum_reciprocals(
    alpha: AlphaVector,
    box: BoxSpec,
    budget: PrecisionBudget = DEFAULT_BUDGET,
    chunks: int = 1,
    workers: int = 1,
) -> SumResult:
    """Rigorous enclosure of ``sum_{q in X, q != 0} ||alpha . q||**-1``.

    Each term is bracketed with outward rounding and the brackets are summed
    with :func:`math.fsum` (correctly rounded, hence independent of chunking),
    then widened by one ulp. ``-q`` contributes the same term as ``q``.
    """
    if box.n != alpha.n:
        raise ValueError("box dimension differs from alpha")
    R = box.integer_radii
    terms = math.prod(2 * r + 1 for r in R) - 1
    if terms == 0:
        return SumResult(box, 0.0, 0.0, 0, None, None)
    fp = kernel.FixedPoint.build(alpha, R, budget)
    parts = kernel.map_chunks(
        lambda s, e: _sum_chunk(alpha, fp, R, s, e, budget), kernel.half_box_size(R), chunks, workers
    )
    lower = 2 * _down(math.fsum(itertools.chain.from_iterable(a for p in parts for a in p.lo)))
    upper = 2 * _up(math.fsum(itertools.chain.from_iterable(a for p in parts for a in p.hi)))
    best = None
    for p in parts:
        best = _pick_min(alpha, best, p.best, budget)
    d = alpha.distance(best[3], budget).dist
    return SumResult(box, lower, upper, terms, d.approx(), best[3])


# --------------------------------------------------------------------------
# dyadic shells

@dataclass(frozen=True)
class DyadicProfile:
    """Counts of ``(p, q)`` with ``2**-(k+1) < |alpha . q + p| <= 2**-k``, ``|q|_inf <= Q``."""

    n: int
    Q: Fraction
    shell_counts: dict
    k_max: int
    k_limit: int | None
    shell_ties: bool
    half_tie_pairs: int

    def tail(self, k: int) -> int:
        """``sum_{j >= k}`` shell counts."""
        return sum(c for j, c in self.shell_counts.items() if j >= k)

    def to_json(self) -> dict:
        return {"q": float(self.Q), "shells": {str(k): c for k, c in sorted(self.shell_counts.items())}}

    csv_columns = ("q", "k", "count")

    def csv_rows(self):
        return [(float(self.Q), k, c) for k, c in sorted(self.shell_counts.items())]

    def to_json_text(self) -> str:
        return to_json_text(self.to_json())

    def to_csv_text(self) -> str:
        return to_csv_text(self.csv_columns, self.csv_rows())


def _ceil_log2_units(v: np.ndarray) -> np.ndarray:
    """``ceil(log2(v))`` for positive int64 values."""
    pows = np.left_shift(np.int64(1), np.arange(63, dtype=np.int64))
    return np.searchsorted(pows, v, side="left")


def exact_shell(d: Real, budget: PrecisionBudget = DEFAULT_BUDGET) -> tuple[int, bool]:
    """Largest ``k`` with ``d <= 2**-k`` (d in (0, 1/2]) and whether ``d == 2**-k``."""
    k = max(1, -math.floor(math.log2(max(d.approx(), 1e-300))) - 1)
    while not decide(d, "<=", Fraction(1, 2**k), budget):
        k -= 1
    while decide(d, "<=", Fraction(1, 2 ** (k + 1)), budget):
        k += 1
    return k, decide(d, "==", Fraction(1, 2**k), budget)


def _shell_chunk(alpha, fp, R, start, stop, budget):
    counts: dict[int, int] = {}
    ties = False
    half_pairs = 0
    b = fp.bits
    for block in kernel.iter_blocks(fp, R, start, stop):
        lo_u = block.dist - block.err
        hi_u = block.dist + block.err
        amb = lo_u <= 0
        k_hi = b - _ceil_log2_units(np.where(amb, 1, lo_u))
        k_lo = b - _ceil_log2_units(hi_u)
        sure = (k_hi == k_lo) & ~amb
        ks, cs = np.unique(k_lo[sure], return_counts=True)
        for k, c in zip(ks.tolist(), cs.tolist()):
            counts[k] = counts.get(k, 0) + c
        for i in np.flatnonzero(~sure):
            q = kernel.row(block.q[i])
            nd = alpha.distance(q, budget)
            if nd.dist.is_zero():
                raise Resonance(q)
            k, on_edge = exact_shell(nd.dist, budget)
            mult = 2 if nd.tie else 1
            counts[k] = counts.get(k, 0) + mult
            ties |= on_edge
            half_pairs += mult - 1
    return counts, ties, half_pairs


def dyadic_profile(
    alpha: AlphaVector,
    Q,
    budget: PrecisionBudget = DEFAULT_BUDGET,
    phi_table: PhiTable | None = None,
    chunks: int = 1,
    workers: int = 1,
) -> DyadicProfile:
    """Shell counts for every ``k >= 1`` (pairs with ``|alpha.q + p| > 1/2`` are ignored).

    An exact hit ``|alpha . q + p| = 2**-k`` goes to shell ``k`` and raises
    ``shell_ties``. ``half_tie_pairs`` counts the extra pair a half-integer
    ``alpha . q`` contributes to shell 1. Shells beyond
    ``floor(log2(Q**N / phi(Q)))`` must be empty; a violation raises.
    """
    Q = Fraction(Q)
    n = alpha.n
    if Q < 1:
        return DyadicProfile(n, Q, {}, 0, None, False, 0)
    R = (math.floor(Q),) * n
    fp = kernel.FixedPoint.build(alpha, R, budget)
    parts = kernel.map_chunks(
        lambda s, e: _shell_chunk(alpha, fp, R, s, e, budget), kernel.half_box_size(R), chunks, workers
    )
    counts: dict[int, int] = {}
    for c, _, _ in parts:
        for k, v in c.items():
            counts[k] = counts.get(k, 0) + 2 * v
    counts = dict(sorted(counts.items()))
    ties = any(t for _, t, _ in parts)
    half_pairs = 2 * sum(h for _, _, h in parts)
    if phi_table is None:
        phi_table = compute_phi_table(alpha, Q, budget)
    phi_q = phi_table.exact_at(Q, budget)
    # largest k with 2**k * phi(Q) <= Q**N
    k_limit = max(0, math.floor(math.log2(float(Q**n) / phi_at(phi_table, Q))) - 1)
    while decide(phi_q * 2 ** (k_limit + 1), "<=", Q**n, budget):
        k_limit += 1
    k_max = max(counts) if counts else 0
    if k_max > k_limit:
        raise InvariantViolation(f"shell {k_max} nonempty beyond log2(Q^N/phi(Q)) = {k_limit}")
    return DyadicProfile(n, Q, counts, k_max, k_limit, ties, half_pairs)


class SandwichReport(NamedTuple):
    lower_sum: int
    upper_sum: int
    sum_lower: float
    sum_upper: float
    holds: bool
    strict: bool


def sandwich_check(profile: DyadicProfile, result: SumResult) -> SandwichReport:
    """``sum 2**k c_k <= S <= sum 2**(k+1) c_k``.

    Each q with ``||alpha . q||`` in shell k has its term in ``[2**k, 2**(k+1))``.
    The extra pair of a half-integer ``alpha . q`` is removed from the lower
    side. ``holds`` means the enclosure of S does not contradict the
    inequalities; ``strict`` means the enclosure lies inside them. The two
    differ only when some term equals ``2**k`` exactly.
    """
    lower_sum = sum(2**k * c for k, c in profile.shell_counts.items()) - 2 * profile.half_tie_pairs
    upper_sum = sum(2 ** (k + 1) * c for k, c in profile.shell_counts.items())
    holds = lower_sum <= result.upper and result.lower <= upper_sum
    strict = lower_sum <= result.lower and result.upper <= upper_sum
    return SandwichReport(lower_sum, upper_sum, result.lower, result.upper, holds, strict)


# --------------------------------------------------------------------------
# gap principle

class GapReport(NamedTuple):
    min_pairwise_separation: float
    min_value: float
    floor: float
    holds: bool
    points: int


def verify_gap_principle(
    alpha: AlphaVector,
    Q,
    budget: PrecisionBudget = DEFAULT_BUDGET,
    phi_table: PhiTable | None = None,
    pair_cap: int = 2_000_000,
) -> GapReport:
    """Distinct values ``||alpha . q||`` in the cube stay ``phi(2Q)/(2Q)**N`` apart.

    Values are compared modulo ``q -> -q``. Sorting reduces the pairwise
    minimum to adjacent differences; adjacent pairs whose enclosures are too
    close to call are compared exactly.
    """
    Q = Fraction(Q)
    n = alpha.n
    R = (math.floor(Q),) * n
    total = kernel.half_box_size(R)
    if total > pair_cap:
        raise PairCapExceeded(f"{total} points exceed the pair-enumeration cap {pair_cap}")
    if phi_table is None or phi_table.q_max < 2 * Q:
        phi_table = compute_phi_table(alpha, max(2 * Q, Fraction(1)), budget)
    floor_val = phi_table.exact_at(2 * Q, budget) * (1 / Fraction(2 * Q) ** n)
    floor_f = phi_at(phi_table, 2 * Q) / float(2 * Q) ** n
    if total == 0:
        return GapReport(math.inf, math.inf, floor_f, True, 0)
    fp = kernel.FixedPoint.build(alpha, R, budget)
    qs, lo, hi = [], [], []
    for block in kernel.iter_blocks(fp, R, 0, total):
        for i in np.flatnonzero(block.lo_units == 0):
            q = kernel.row(block.q[i])
            if alpha.distance(q, budget).dist.is_zero():
                raise Resonance(q)
        qs.append(block.q)
        lo.append(block.lo_float())
        hi.append(block.hi_float())
    qs, lo, hi = np.concatenate(qs), np.concatenate(lo), np.concatenate(hi)
    order = np.lexsort((np.arange(len(lo)), lo))
    qs, lo, hi = qs[order], lo[order], hi[order]
    # float subtraction of values in [0, 1/2] is off by at most 2**-54
    fl_up = _up(floor_f) * (1 + 1e-12) + 2.0**-50

    def exact(i):
        return alpha.distance(kernel.row(qs[i]), budget).dist

    holds = True
    for i in np.flatnonzero(~(lo > fl_up)):
        if not decide(exact(i), ">=", floor_val, budget):
            holds = False
    # clusters: runs whose next lower bound is not clear of every earlier upper bound
    reach = np.maximum.accumulate(hi)
    cut = np.flatnonzero(lo[1:] - reach[:-1] > fl_up) + 1
    for run in np.split(np.arange(len(lo)), cut):
        if len(run) < 2:
            continue
        vals = sorted(((exact(i), i) for i in run), key=lambda vi: vi[0].approx())
        # float approximations order well-separated values; settle neighbours exactly
        for (a, _), (b, _) in zip(vals, vals[1:]):
            diff = b - a
            if sign(diff, budget) < 0:
                diff = -diff
            if not decide(diff, ">=", floor_val, budget):
                holds = False
    mid = np.sort((lo + hi) / 2)
    min_gap = float(np.min(np.diff(mid))) if len(mid) > 1 else math.inf
    return GapReport(min_gap, float(mid[0]), floor_f, holds, int(len(mid)))
