"""Closed-form bounds for ``S`` and ``|M|``, empirical constants, shell differences.

All bound formulas use the natural logarithm; ``log2`` appears only in the
shell threshold ``K``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .alpha import AlphaVector
from .errors import MissingPhi2Q
from .lattice import count_many, verify_prop_bound
from .phi import compute_phi_table, phi_at
from .realnum import DEFAULT_BUDGET, PrecisionBudget
from .serialize import to_csv_text, to_json_text
from .sums import BoxSpec, sum_reciprocals

BOUND_NAMES = ("lv_lower", "thm_upper", "thm_lower", "gap_upper", "lang_1d", "trivial_floor")


@dataclass(frozen=True)
class BoundCatalogEntry:
    name: str
    value: float
    n: int
    q: float
    phi_q: float
    phi_2q: float | None = None
    # set when the log factor is below 1, so the entry carries no information
    trivial: bool = False

    def to_json(self) -> dict:
        return {"name": self.name, "value": self.value, "n": self.n, "q": self.q,
                "phi_q": self.phi_q, "trivial": self.trivial}

    csv_columns = ("name", "value", "n", "q", "phi_q", "trivial")

    def csv_row(self):
        return (self.name, self.value, self.n, self.q, self.phi_q, self.trivial)


def catalog_json_text(entries: Sequence[BoundCatalogEntry]) -> str:
    return to_json_text([e.to_json() for e in entries])


def catalog_csv_text(entries: Sequence[BoundCatalogEntry]) -> str:
    return to_csv_text(BoundCatalogEntry.csv_columns, [e.csv_row() for e in entries])


def _check_phi(v, label):
    v = float(v)
    if not (0 < v <= 1):
        raise ValueError(f"{label} must lie in (0, 1], got {v}")
    return v


def evaluate_bounds(N: int, Q, phi_Q, phi_2Q=None, names: Sequence[str] | None = None) -> list[BoundCatalogEntry]:
    """Every applicable bound at ``(N, Q, phi(Q)[, phi(2Q)])``.

    Without ``names``, ``gap_upper`` is included only when ``phi_2Q`` is
    given and ``lang_1d`` only at ``N = 1``. Requesting ``gap_upper``
    explicitly without ``phi_2Q`` raises :class:`MissingPhi2Q`.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    q = float(Q)
    if q < 1:
        raise ValueError("Q must be >= 1")
    phi = _check_phi(phi_Q, "phi(Q)")
    phi2 = None if phi_2Q is None else _check_phi(phi_2Q, "phi(2Q)")
    if names is None:
        names = [n for n in BOUND_NAMES
                 if not (n == "gap_upper" and phi2 is None) and not (n == "lang_1d" and N != 1)]
    unknown = set(names) - set(BOUND_NAMES)
    if unknown:
        raise ValueError(f"unknown bounds: {sorted(unknown)}")

    qn = q**N
    log_q = math.log(q)
    out = []
    for name in names:
        trivial = False
        if name == "lv_lower":
            value, trivial = qn * log_q, log_q < 1
        elif name == "thm_upper":
            value = qn * log_q + qn / phi
        elif name == "thm_lower":
            lg = math.log(q * phi)
            value, trivial = max(qn * lg, 0.0), lg < 1
        elif name == "gap_upper":
            if phi2 is None:
                raise MissingPhi2Q("gap_upper needs phi(2Q)")
            value = qn * log_q / phi2
        elif name == "lang_1d":
            if N != 1:
                raise ValueError("lang_1d is only defined for N = 1")
            value = q * log_q + q / phi
        else:
            value = float(2 * ((2 * math.floor(q) + 1) ** N - 1))
        out.append(BoundCatalogEntry(name, value, N, q, phi, phi2, trivial))
    return out


def _bound(entries, name) -> float:
    return next(e.value for e in entries if e.name == name)


@dataclass(frozen=True)
class FitRow:
    q: int
    s: float
    phi_q: float
    thm_upper: float
    thm_lower: float
    r: float
    l: float


@dataclass(frozen=True)
class FitReport:
    grid: tuple[int, ...]
    fitted_constant_low: float
    fitted_constant_high: float
    slope: float
    residual: float
    stability: float
    rows: tuple[FitRow, ...]

    def to_json(self) -> dict:
        return {
            "grid": list(self.grid),
            "fitted_constant_low": self.fitted_constant_low,
            "fitted_constant_high": self.fitted_constant_high,
            "slope": self.slope,
            "residual": self.residual,
            "stability": self.stability,
            "rows": [dict(vars(r)) for r in self.rows],
        }

    csv_columns = ("q", "s", "phi_q", "thm_upper", "thm_lower", "r", "l")

    def csv_rows(self):
        return [(r.q, r.s, r.phi_q, r.thm_upper, r.thm_lower, r.r, r.l) for r in self.rows]

    def to_json_text(self) -> str:
        return to_json_text(self.to_json())

    def to_csv_text(self) -> str:
        return to_csv_text(self.csv_columns, self.csv_rows())


def fit_theorem_constants(
    alpha: AlphaVector,
    Q_grid: Sequence[int],
    budget: PrecisionBudget = DEFAULT_BUDGET,
    chunks: int = 1,
    workers: int = 1,
) -> FitReport:
    """Ratios of ``S(alpha, Q)`` to the two sides of the main estimate.

    ``r = S / thm_upper`` and ``l = S / max(thm_lower, Q^N)``; the high
    constant is ``max r``, the low one ``min l``, and ``stability`` is
    ``max r / min r``. ``slope`` and ``residual`` come from a least-squares
    fit of ``log S`` on ``log Q``.
    """
    grid = [Fraction(q) for q in Q_grid]
    if not grid:
        raise ValueError("Q grid must be nonempty")
    if any(q < 2 for q in grid) or any(a >= b for a, b in zip(grid, grid[1:])):
        raise ValueError("Q grid must be increasing with every Q >= 2")
    n = alpha.n
    table = compute_phi_table(alpha, grid[-1], budget, chunks, workers)
    rows = []
    for q in grid:
        s = sum_reciprocals(alpha, BoxSpec.cube(q, n), budget, chunks, workers).midpoint
        phi = phi_at(table, q)
        b = evaluate_bounds(n, q, phi, names=("thm_upper", "thm_lower"))
        up, lo = _bound(b, "thm_upper"), _bound(b, "thm_lower")
        rows.append(FitRow(int(q) if q.denominator == 1 else float(q), s, phi, up, lo,
                           s / up, s / max(lo, float(q) ** n)))
    rs = [r.r for r in rows]
    ls = [r.l for r in rows if r.l > 0]
    xs = [math.log(float(r.q)) for r in rows]
    ys = [math.log(r.s) for r in rows]
    if len(rows) > 1:
        coef, res, *_ = np.polyfit(xs, ys, 1, full=True)
        slope = float(coef[0])
        residual = float(math.sqrt(res[0] / len(rows))) if len(res) else 0.0
    else:
        slope, residual = float("nan"), 0.0
    return FitReport(tuple(r.q for r in rows), min(ls), max(rs), slope, residual, max(rs) / min(rs), tuple(rows))


def default_prop_grid(n: int) -> list[tuple[Fraction, int]]:
    """``eps = 2**-1 .. 2**-8`` against dyadic ``Q`` from 16 up to a size the box allows."""
    top = {1: 10, 2: 8}.get(n, 5)
    return [(Fraction(1, 2**e), 2**k) for e in range(1, 9) for k in range(4, top + 1)]


def default_c_n(alpha: AlphaVector, budget: PrecisionBudget = DEFAULT_BUDGET, chunks: int = 1, workers: int = 1) -> float:
    """Twice the worst observed ratio of |M| error to ``(eps Q^N / phi(Q))**(N/(N+1))``."""
    rep = verify_prop_bound(alpha, default_prop_grid(alpha.n), budget, chunks, workers)
    return 2 * rep.max_ratio


@dataclass(frozen=True)
class ShellRow:
    k: int
    count_k: int
    count_k1: int
    difference: int
    required: float
    margin: float


@dataclass(frozen=True)
class ShellCheckReport:
    q: float
    c_n: float
    phi_q: float
    K: float
    k_range: tuple[int, ...]
    rows: tuple[ShellRow, ...]
    holds: bool
    min_margin: float | None
    lower_bound: float

    def to_json(self) -> dict:
        return {
            "q": self.q,
            "c_n": self.c_n,
            "phi_q": self.phi_q,
            "K": self.K,
            "k_range": list(self.k_range),
            "holds": self.holds,
            "min_margin": self.min_margin,
            "lower_bound": self.lower_bound,
            "rows": [dict(vars(r)) for r in self.rows],
        }

    csv_columns = ("k", "count_k", "count_k1", "difference", "required", "margin")

    def csv_rows(self):
        return [(r.k, r.count_k, r.count_k1, r.difference, r.required, r.margin) for r in self.rows]

    def to_json_text(self) -> str:
        return to_json_text(self.to_json())

    def to_csv_text(self) -> str:
        return to_csv_text(self.csv_columns, self.csv_rows())


def shell_difference_check(
    alpha: AlphaVector,
    Q,
    c_N=None,
    budget: PrecisionBudget = DEFAULT_BUDGET,
    chunks: int = 1,
    workers: int = 1,
) -> ShellCheckReport:
    """``|M(2^-k)| - |M(2^-k-1)| >= 2^-k Q^N`` for integer ``k`` in ``[1, K - 1]``.

    ``K = log2(Q^N phi(Q)^N / c_N^(N+1))``. An empty range holds vacuously.
    """
    Q = Fraction(Q)
    if Q < 1:
        raise ValueError("Q must be >= 1")
    n = alpha.n
    if c_N is None:
        c_N = default_c_n(alpha, budget, chunks, workers)
    c_N = float(c_N)
    if not c_N > 0:
        raise ValueError("c_N must be positive")
    table = compute_phi_table(alpha, Q, budget, chunks, workers)
    phi = phi_at(table, Q)
    qn = float(Q) ** n
    K = math.log2(qn * phi**n / c_N ** (n + 1))
    k_top = math.floor(K - 1)
    ks = tuple(range(1, k_top + 1))
    rows = []
    if ks:
        eps = [Fraction(1, 2**k) for k in range(1, k_top + 2)]
        counts, _ = count_many(alpha, eps, Q, budget, chunks, workers)
        for i, k in enumerate(ks):
            diff = counts[i] - counts[i + 1]
            req = 2.0**-k * qn
            rows.append(ShellRow(k, counts[i], counts[i + 1], diff, req, diff - req))
    margins = [r.margin for r in rows]
    return ShellCheckReport(
        float(Q), c_N, phi, K, ks, tuple(rows),
        all(m >= 0 for m in margins),
        min(margins) if margins else None,
        max(k_top, 0) * qn,
    )
