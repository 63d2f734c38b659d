"""The lattice ``Lambda_alpha = A_alpha Z**(N+1)`` and the counting set ``M(alpha, eps, Q)``.

``M`` is the set of nonzero ``(p, q)`` with ``|alpha . q + p| <= eps`` and
``|q|_inf <= Q``; its points are exactly the nonzero lattice vectors
``(alpha . q + p, q)`` inside the slab ``[-eps, eps] x [-Q, Q]**N``.
Only the instance with blocks ``m = beta = (1, N)`` and ``C = {q = 0}`` is
modelled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from . import kernel, oracle
from .alpha import AlphaVector, parse_alpha  # noqa: F401  (re-exported)
from .errors import InvariantViolation, OutputCapExceeded, Resonance
from .phi import PhiTable, compute_phi_table, phi_at
from .realnum import DEFAULT_BUDGET, PrecisionBudget, Real, decide, sign
from .serialize import to_csv_text, to_json_text

HALF = Fraction(1, 2)


def _check_count_args(eps, Q):
    eps, Q = Fraction(eps), Fraction(Q)
    if not (0 < eps <= HALF):
        raise ValueError("eps must lie in (0, 1/2]")
    if Q < 1:
        raise ValueError("Q must be >= 1")
    return eps, Q


@dataclass(frozen=True)
class LatticeInstance:
    alpha: AlphaVector
    m: tuple[int, int] = field(init=False)
    beta: tuple[int, int] = field(init=False)
    t: int = field(init=False)
    I: tuple[int, ...] = (2,)
    n_blocks: int = 2

    def __post_init__(self):
        n = self.alpha.n
        object.__setattr__(self, "m", (1, n))
        object.__setattr__(self, "beta", (1, n))
        object.__setattr__(self, "t", 1 + n)

    @property
    def dimension(self) -> int:
        return self.alpha.n + 1

    def basis(self) -> list[list[Real]]:
        """Rows of ``A_alpha``: ``(1 | alpha)`` over ``(0 | I_N)``."""
        n = self.alpha.n
        top = [Real(1)] + list(self.alpha.reals)
        rest = [[Real(0)] + [Real(int(i == j)) for j in range(n)] for i in range(n)]
        return [top] + rest

    def determinant(self) -> int:
        # upper triangular; product of the diagonal
        diag = [self.basis()[i][i] for i in range(self.dimension)]
        prod = Real(1)
        for d in diag:
            prod = prod * d
        return int(prod.center.rational_part())

    def vector(self, p: int, q: Sequence[int]) -> tuple[Real, tuple[int, ...]]:
        """``A_alpha (p, q) = (alpha . q + p, q)``."""
        return self.alpha.dot(q) + int(p), tuple(int(v) for v in q)

    def in_subspace_C(self, q: Sequence[int]) -> bool:
        return not any(q)


@dataclass(frozen=True)
class CountRecord:
    n: int
    q: Fraction
    eps: Fraction
    count: int
    main_term: float
    error: float
    prop_bound_base: float | None
    ties_present: bool

    csv_columns = ("n", "q", "eps", "count", "main_term", "error", "prop_bound_base", "ties")

    def csv_row(self):
        return (self.n, float(self.q), float(self.eps), self.count, self.main_term, self.error,
                self.prop_bound_base, self.ties_present)

    def to_json(self) -> dict:
        return dict(zip(self.csv_columns, self.csv_row()))

    def to_json_text(self) -> str:
        return to_json_text(self.to_json())

    def to_csv_text(self) -> str:
        return to_csv_text(self.csv_columns, [self.csv_row()])


class _HalfCounts(NamedTuple):
    counts: list[int]
    ties: list[bool]


def _count_chunk(alpha, fp, R, eps_list, start, stop, budget) -> _HalfCounts:
    counts = [0] * len(eps_list)
    ties = [False] * len(eps_list)
    thresholds = [kernel.threshold_units(e, fp.bits) for e in eps_list]
    for block in kernel.iter_blocks(fp, R, start, stop):
        lo, hi = block.dist - block.err, block.dist + block.err
        for j, (e, t) in enumerate(zip(eps_list, thresholds)):
            sure = hi <= t
            unsure = ~sure & ~(lo > t)
            if e == HALF:
                # a half-integer alpha.q admits two p; look at those rows exactly
                unsure |= hi >= (1 << (fp.bits - 1))
                sure &= ~unsure
            counts[j] += int(np.count_nonzero(sure))
            for i in np.flatnonzero(unsure):
                nd = alpha.distance(kernel.row(block.q[i]), budget)
                s = sign(nd.dist - e, budget)
                if s <= 0:
                    counts[j] += 2 if nd.tie and e == HALF else 1
                if s == 0 or (nd.tie and e == HALF):
                    ties[j] = True
    return _HalfCounts(counts, ties)


def count_many(
    alpha: AlphaVector,
    eps_list: Sequence,
    Q,
    budget: PrecisionBudget = DEFAULT_BUDGET,
    chunks: int = 1,
    workers: int = 1,
) -> tuple[list[int], list[bool]]:
    """``|M(alpha, eps, Q)|`` for several eps in one pass over the box."""
    eps_list = [Fraction(e) for e in eps_list]
    R = (math.floor(Fraction(Q)),) * alpha.n
    fp = kernel.FixedPoint.build(alpha, R, budget)
    parts = kernel.map_chunks(
        lambda s, e: _count_chunk(alpha, fp, R, eps_list, s, e, budget),
        kernel.half_box_size(R), chunks, workers,
    )
    counts = [2 * sum(p.counts[j] for p in parts) for j in range(len(eps_list))]
    ties = [any(p.ties[j] for p in parts) for j in range(len(eps_list))]
    return counts, ties


def _phi_or_none(alpha, Q, budget, phi_table):
    if phi_table is not None:
        return phi_table
    try:
        return compute_phi_table(alpha, max(Fraction(Q), Fraction(1)), budget)
    except Resonance:
        return None


def make_record(alpha, eps, Q, count, ties, phi_table) -> CountRecord:
    n = alpha.n
    main = Fraction(2 ** (n + 1)) * eps * Q**n
    base = None
    if phi_table is not None:
        phi_q = phi_at(phi_table, Q)
        base = (float(eps * Q**n) / phi_q) ** (n / (n + 1))
    return CountRecord(n, Q, eps, count, float(main), float(abs(count - main)), base, ties)


def count_M(
    alpha: AlphaVector,
    eps,
    Q,
    budget: PrecisionBudget = DEFAULT_BUDGET,
    phi_table: PhiTable | None = None,
    chunks: int = 1,
    workers: int = 1,
) -> CountRecord:
    """Count ``M(alpha, eps, Q)``.

    For ``eps <= 1/2`` each ``q`` contributes the nearest integer(s) to
    ``-alpha . q`` only: one ``p`` normally, two when ``alpha . q`` is a
    half-integer and ``eps = 1/2`` (both pairs belong to the set).
    ``prop_bound_base`` is None when phi is undefined (resonant alpha).
    """
    eps, Q = _check_count_args(eps, Q)
    (count,), (ties,) = count_many(alpha, [eps], Q, budget, chunks, workers)
    return make_record(alpha, eps, Q, count, ties, _phi_or_none(alpha, Q, budget, phi_table))


def enumerate_M(
    alpha: AlphaVector,
    eps,
    Q,
    budget: PrecisionBudget = DEFAULT_BUDGET,
    cap: int = 10**6,
) -> list[tuple[int, tuple[int, ...]]]:
    """Elements ``(p, q)`` of ``M(alpha, eps, Q)`` sorted by ``(q, p)``."""
    eps, Q = _check_count_args(eps, Q)
    R = (math.floor(Q),) * alpha.n
    fp = kernel.FixedPoint.build(alpha, R, budget)
    t = kernel.threshold_units(eps, fp.bits)
    out = []
    for block in kernel.iter_blocks(fp, R, 0, kernel.half_box_size(R)):
        lo, hi = block.dist - block.err, block.dist + block.err
        sure = (hi <= t) & block.nearest_known()
        unsure = ~sure & ~(lo > t)
        for i in np.flatnonzero(sure):
            q = kernel.row(block.q[i])
            out.append((-int(block.nearest[i]), q))
        for i in np.flatnonzero(unsure):
            q = kernel.row(block.q[i])
            nd = alpha.distance(q, budget)
            if decide(nd.dist, "<=", eps, budget):
                out.append((-nd.nearest, q))
                if nd.tie:
                    out.append((-nd.nearest - 1, q))
        if 2 * len(out) > cap:
            raise OutputCapExceeded(f"M has more than {cap} elements")
    full = out + [(-p, tuple(-v for v in q)) for p, q in out]
    full.sort(key=lambda pq: (pq[1], pq[0]))
    return full


def cardinality_bridge(
    alpha: AlphaVector,
    eps,
    Q,
    budget: PrecisionBudget = DEFAULT_BUDGET,
) -> tuple[int, int]:
    """``(|Lambda_alpha cap Z_{eps,Q}|, |M|)``; the first must exceed the second by one.

    The lattice side walks every ``(p, q)`` of the slab directly (origin
    included) with the brute-force scanner; the M side uses :func:`count_M`.
    """
    eps, Q = _check_count_args(eps, Q)
    inst = LatticeInstance(alpha)
    box_count = 0
    for p, q in oracle.naive_pairs(alpha, eps, Q, budget, include_origin=True):
        first, _ = inst.vector(p, q)
        if not (decide(first, "<=", eps, budget) and decide(first, ">=", -eps, budget)):
            raise InvariantViolation(f"scanner returned ({p}, {q}) outside the slab")
        box_count += 1
    (m_count,), _ = count_many(alpha, [eps], Q, budget)
    if box_count != m_count + 1:
        raise InvariantViolation(f"|Lambda cap Z| = {box_count} but |M| = {m_count}")
    return box_count, m_count


def lambda1_in_C(instance: LatticeInstance, search: int = 3) -> float:
    """Shortest nonzero vector of ``Lambda_alpha cap C``, found by enumeration.

    Vectors of the lattice lying in ``C`` are ``A_alpha (p, 0) = (p, 0)``.
    """
    zero = (0,) * instance.alpha.n
    best = None
    for p in range(-search, search + 1):
        if p == 0:
            continue
        first, q = instance.vector(p, zero)
        assert instance.in_subspace_C(q)
        length = abs(first.center.rational_part())
        best = length if best is None else min(best, length)
    return float(best)


class NuWitness(NamedTuple):
    first: float  # alpha . q + p
    p: int
    q: tuple[int, ...]


class NuResult(NamedTuple):
    value: float  # math.inf when no lattice vector off C lies inside the ball
    norm_squared: Real | None  # Nm_beta(witness)**2, exact
    witness: NuWitness | None


def _nu_scan(instance, fp, R, rho, start, stop, budget):
    alpha = instance.alpha
    n = alpha.n
    rho2 = Fraction(rho) ** 2
    disc_max = math.ceil(rho2) - 1  # |q|^2 < rho^2
    safe_max = math.ceil(rho2 - Fraction(1, 4)) - 1  # |q|^2 < rho^2 - 1/4
    rows = []
    for block in kernel.iter_blocks(fp, R, start, stop):
        qq = np.sum(block.q * block.q, axis=1)
        keep = qq <= disc_max
        edge = keep & (qq > safe_max)
        xlo, xhi = block.lo_float(), block.hi_float()
        for i in np.flatnonzero(edge):
            s = rho2 - int(qq[i])
            if xhi[i] * xhi[i] * (1 + 1e-12) < float(s):
                continue
            if xlo[i] * xlo[i] * (1 - 1e-12) >= float(s):
                keep[i] = False
                continue
            d = alpha.distance(kernel.row(block.q[i]), budget).dist
            keep[i] = decide(d * d, "<", s, budget)
        root = np.sqrt(qq.astype(np.float64)) ** n
        lo = xlo * root * (1 - 1e-12)
        hi = xhi * root * (1 + 1e-12)
        for i in np.flatnonzero(keep):
            rows.append((block.start + int(i), float(lo[i]), float(hi[i]), kernel.row(block.q[i]), int(qq[i])))
    return rows


def nu(
    instance: LatticeInstance,
    rho,
    budget: PrecisionBudget = DEFAULT_BUDGET,
    chunks: int = 1,
    workers: int = 1,
) -> NuResult:
    """``inf Nm_beta(v)**(1/t)`` over lattice vectors ``v`` off ``C`` with ``|v|_2 < rho``.

    For each ``q`` only the nearest ``p`` can matter, and ``|v|_2 >= |q|_2``
    confines ``q`` to ``|q|_inf < rho``.
    """
    rho = Fraction(rho)
    if rho <= 0:
        raise ValueError("rho must be positive")
    alpha = instance.alpha
    n = alpha.n
    R0 = math.ceil(rho) - 1
    if R0 < 1:
        return NuResult(math.inf, None, None)
    R = (R0,) * n
    fp = kernel.FixedPoint.build(alpha, R, budget)
    parts = kernel.map_chunks(
        lambda s, e: _nu_scan(instance, fp, R, rho, s, e, budget), kernel.half_box_size(R), chunks, workers
    )
    rows = sorted(r for part in parts for r in part)
    if not rows:
        return NuResult(math.inf, None, None)
    cut = min(r[2] for r in rows)
    best = None  # (norm squared, norm, q, nearest)
    for _, lo, _, q, qq in rows:
        if lo > cut:
            continue
        nd = alpha.distance(q, budget)
        norm_sq = nd.dist * nd.dist * (qq**n)
        if best is None or decide(norm_sq, "<", best[0], budget):
            best = (norm_sq, nd, q, qq)
    norm_sq, nd, q, qq = best
    norm_val = nd.dist.approx() * math.sqrt(qq) ** n
    first = alpha.dot(q) - nd.nearest
    witness = NuWitness(first.approx(), -nd.nearest, q)
    return NuResult(norm_val ** (1 / (n + 1)), norm_sq, witness)


@dataclass(frozen=True)
class AdmissibilityReport:
    rho: float
    nu_value: float
    mu_value: float
    lambda1_C: float
    phi_floor: float
    witness: NuWitness | None

    def to_json(self) -> dict:
        return {
            "rho": self.rho,
            "nu": self.nu_value,
            "mu": self.mu_value,
            "lambda1_c": self.lambda1_C,
            "phi_floor": self.phi_floor,
            "witness": None if self.witness is None else
            {"first": self.witness.first, "p": self.witness.p, "q": list(self.witness.q)},
        }


def mu(
    instance: LatticeInstance,
    rho,
    budget: PrecisionBudget = DEFAULT_BUDGET,
    phi_table: PhiTable | None = None,
) -> AdmissibilityReport:
    """``min(lambda_1(Lambda cap C), nu(Lambda, rho))`` plus the phi floor it must clear.

    Raises :class:`InvariantViolation` if ``nu**(N+1) < phi(rho)``, which
    would contradict the phi-bad approximability witnessed by the table.
    """
    rho = Fraction(rho)
    alpha = instance.alpha
    n = alpha.n
    lam = lambda1_in_C(instance)
    res = nu(instance, rho, budget)
    if phi_table is None or phi_table.q_max < rho:
        phi_table = compute_phi_table(alpha, max(rho, Fraction(1)), budget)
    phi_rho = phi_table.exact_at(rho, budget)
    floor_val = phi_at(phi_table, rho) ** (1 / (n + 1))
    if res.norm_squared is not None and not decide(res.norm_squared, ">=", phi_rho * phi_rho, budget):
        raise InvariantViolation(f"nu^(N+1) < phi(rho) at rho={float(rho)}")
    mu_val = min(lam, res.value)
    if mu_val < min(1.0, floor_val) * (1 - 1e-12):
        raise InvariantViolation("mu below min(1, phi(rho)^(1/(N+1)))")
    return AdmissibilityReport(float(rho), res.value, mu_val, lam, floor_val, res.witness)


@dataclass(frozen=True)
class WidmerReport:
    n: int
    q: float
    eps: float
    q_bar: float
    big_n: int
    terms: tuple[tuple[float, float, float], ...]  # (B, mu(Lambda, B), error term)
    min_term: float
    count: int
    actual_error: float
    ratio: float

    def to_json(self) -> dict:
        return {
            "n": self.n, "q": self.q, "eps": self.eps, "q_bar": self.q_bar, "big_n": self.big_n,
            "terms": [{"b": b, "mu": m, "term": t} for b, m, t in self.terms],
            "min_term": self.min_term, "count": self.count,
            "actual_error": self.actual_error, "ratio": self.ratio,
        }

    csv_columns = ("b", "mu", "term", "q_bar", "actual_error", "ratio")

    def csv_rows(self):
        return [(b, m, t, self.q_bar, self.actual_error, self.actual_error / t) for b, m, t in self.terms]


def widmer_instance_check(
    instance: LatticeInstance,
    eps,
    Q,
    B_grid: Sequence | None = None,
    budget: PrecisionBudget = DEFAULT_BUDGET,
) -> WidmerReport:
    """Evaluate ``(Qbar / mu(Lambda, B) + Q / B)**N`` over ``B_grid`` against the real error.

    The implied constant is unknown, so the ratio is reported, not asserted.
    """
    eps, Q = _check_count_args(eps, Q)
    alpha = instance.alpha
    n = alpha.n
    grid = [Fraction(b) for b in (B_grid or [Q])]
    if any(not (0 < b <= Q) for b in grid):
        raise ValueError("every B must satisfy 0 < B <= Q")
    q_bar = float(eps * Q**n) ** (1 / (n + 1))
    phi_table = compute_phi_table(alpha, Q, budget)
    terms = []
    for b in grid:
        m = mu(instance, b, budget, phi_table).mu_value
        terms.append((float(b), m, (q_bar / m + float(Q / b)) ** n))
    rec = count_M(alpha, eps, Q, budget, phi_table)
    min_term = min(t for _, _, t in terms)
    return WidmerReport(n, float(Q), float(eps), q_bar, n + 1, tuple(terms), min_term, rec.count,
                        rec.error, rec.error / min_term)


@dataclass(frozen=True)
class PropBoundReport:
    records: tuple[CountRecord, ...]
    ratios: tuple[float, ...]
    max_ratio: float
    slope: float
    intercept: float

    csv_columns = CountRecord.csv_columns + ("ratio",)

    def csv_rows(self):
        return [r.csv_row() + (x,) for r, x in zip(self.records, self.ratios)]

    def to_json(self) -> dict:
        return {
            "records": [dict(r.to_json(), ratio=x) for r, x in zip(self.records, self.ratios)],
            "max_ratio": self.max_ratio,
            "slope": self.slope,
            "intercept": self.intercept,
        }


def loglog_fit(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Least-squares ``log y = slope * log x + intercept``."""
    lx, ly = np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float))
    if len(set(lx.tolist())) < 2:
        return math.nan, math.nan
    slope, intercept = np.polyfit(lx, ly, 1)
    return float(slope), float(intercept)


def verify_prop_bound(
    alpha: AlphaVector,
    grid: Sequence[tuple],
    budget: PrecisionBudget = DEFAULT_BUDGET,
    chunks: int = 1,
    workers: int = 1,
) -> PropBoundReport:
    """Error of ``|M|`` against ``(eps Q^N / phi(Q))**(N/(N+1))`` over a grid of ``(eps, Q)``.

    The slope of ``log(error + 1)`` on ``log(eps Q^N / phi(Q))`` is the
    sharpness diagnostic; ``N/(N+1)`` is the exponent being tested.
    """
    grid = [_check_count_args(e, q) for e, q in grid]
    if not grid:
        raise ValueError("grid must be nonempty")
    n = alpha.n
    table = compute_phi_table(alpha, max(q for _, q in grid), budget, chunks, workers)
    by_q: dict[Fraction, list[Fraction]] = {}
    for e, q in grid:
        by_q.setdefault(q, []).append(e)
    results = {}
    for q, eps_list in by_q.items():
        counts, ties = count_many(alpha, eps_list, q, budget, chunks, workers)
        for e, c, t in zip(eps_list, counts, ties):
            results[(e, q)] = make_record(alpha, e, q, c, t, table)
    records = tuple(results[g] for g in grid)
    ratios = tuple(r.error / r.prop_bound_base for r in records)
    xs = [float(r.eps * r.q**n) / phi_at(table, r.q) for r in records]
    slope, intercept = loglog_fit(xs, [r.error + 1 for r in records])
    return PropBoundReport(records, ratios, max(ratios), slope, intercept)
