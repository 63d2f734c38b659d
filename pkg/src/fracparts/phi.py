"""Empirical maximal phi: the running minimum of ``|q|_inf**N * ||alpha . q||``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, NamedTuple

import numpy as np

from . import kernel
from .alpha import AlphaVector
from .errors import InvariantViolation, OutOfRange, Resonance
from .realnum import DEFAULT_BUDGET, PrecisionBudget, Real, decide, enclose, sign
from .serialize import to_csv_text, to_json_text


@dataclass(frozen=True)
class Breakpoint:
    x: int
    value: float
    witness: tuple[int, ...]


@dataclass(frozen=True)
class PhiTable:
    alpha: AlphaVector
    q_max: Fraction
    breakpoints: tuple[Breakpoint, ...]

    def exact_value(self, i: int, budget: PrecisionBudget = DEFAULT_BUDGET) -> Real:
        bp = self.breakpoints[i]
        return shell_value(self.alpha, bp.witness, budget)

    def index_at(self, x) -> int | None:
        """Index of the breakpoint in force at ``x`` (None below 1)."""
        x = Fraction(x)
        if x > self.q_max:
            raise OutOfRange(f"x={float(x)} exceeds q_max={float(self.q_max)}")
        if x < 1:
            return None
        idx = None
        for i, bp in enumerate(self.breakpoints):
            if bp.x <= x:
                idx = i
            else:
                break
        return idx

    def exact_at(self, x, budget: PrecisionBudget = DEFAULT_BUDGET) -> Real:
        i = self.index_at(x)
        return Real(1) if i is None else self.exact_value(i, budget)

    def to_json(self) -> dict:
        return {
            "alpha": self.alpha.render(),
            "q_max": float(self.q_max),
            "breakpoints": [
                {"x": bp.x, "value": bp.value, "witness": list(bp.witness)} for bp in self.breakpoints
            ],
        }

    csv_columns = ("x", "value", "witness")

    def csv_rows(self):
        return [(bp.x, bp.value, bp.witness) for bp in self.breakpoints]

    def to_json_text(self) -> str:
        return to_json_text(self.to_json())

    def to_csv_text(self) -> str:
        return to_csv_text(self.csv_columns, self.csv_rows())


def shell_value(alpha: AlphaVector, q, budget: PrecisionBudget = DEFAULT_BUDGET) -> Real:
    """``|q|_inf**N * ||alpha . q||`` as an exact real."""
    x = max(abs(int(v)) for v in q)
    return alpha.distance(q, budget).dist * (x ** alpha.n)


def _value_bounds(block: kernel.Block, n: int):
    shells = np.max(np.abs(block.q), axis=1)
    weight = shells.astype(np.float64) ** n
    lo = np.nextafter(block.lo_float() * weight, -np.inf)
    hi = np.nextafter(block.hi_float() * weight, np.inf)
    return shells, np.maximum(lo, 0.0), hi


def _check_resonance(alpha, block, budget):
    for i in np.flatnonzero(block.lo_units == 0):
        q = kernel.row(block.q[i])
        if alpha.distance(q, budget).dist.is_zero():
            raise Resonance(q)


class _ShellScan(NamedTuple):
    min_hi: np.ndarray
    # (half-box index, shell, lo, hi, q) of rows that may attain their shell minimum
    contenders: list


def _scan(alpha, fp, R, start, stop, budget) -> _ShellScan:
    size = R[0] + 1
    min_hi = np.full(size, np.inf)
    rows = []
    for block in kernel.iter_blocks(fp, R, start, stop):
        _check_resonance(alpha, block, budget)
        shells, lo, hi = _value_bounds(block, alpha.n)
        np.minimum.at(min_hi, shells, hi)
        rows.append((block, shells, lo, hi))
    contenders = []
    for block, shells, lo, hi in rows:
        for i in np.flatnonzero(lo <= min_hi[shells]):
            contenders.append((block.start + int(i), int(shells[i]), float(lo[i]), float(hi[i]), kernel.row(block.q[i])))
    return _ShellScan(min_hi, contenders)


def _upper_float(v: Real) -> float:
    iv = enclose(v, 64)
    return float(np.nextafter(float(iv.hi), np.inf))


def compute_phi_table(
    alpha: AlphaVector,
    q_max,
    budget: PrecisionBudget = DEFAULT_BUDGET,
    chunks: int = 1,
    workers: int = 1,
) -> PhiTable:
    """Exact running-minimum table over shells ``|q|_inf = 1 .. floor(q_max)``.

    Breakpoints are recorded only where the minimum strictly drops; within a
    shell the lexicographically first minimiser (with first nonzero
    coordinate positive) is the witness.
    """
    q_max = Fraction(q_max)
    if q_max < 1:
        raise ValueError("q_max must be >= 1")
    n = alpha.n
    R = (math.floor(q_max),) * n
    fp = kernel.FixedPoint.build(alpha, R, budget)
    total = kernel.half_box_size(R)
    scans = kernel.map_chunks(lambda s, e: _scan(alpha, fp, R, s, e, budget), total, chunks, workers)

    min_hi = np.minimum.reduce([s.min_hi for s in scans])
    by_shell: dict[int, list] = {}
    for s in scans:
        for idx, x, lo, hi, q in s.contenders:
            if lo <= min_hi[x]:
                by_shell.setdefault(x, []).append((idx, lo, q))

    breakpoints = []
    cur: Real | None = None
    cur_hi = math.inf
    for x in sorted(by_shell):
        cands = sorted(by_shell[x])
        if min(c[1] for c in cands) > cur_hi:
            continue
        best_q, best_v = None, None
        for _, _, q in cands:
            v = shell_value(alpha, q, budget)
            if best_v is None or decide(v, "<", best_v, budget):
                best_q, best_v = q, v
        if cur is None or decide(best_v, "<", cur, budget):
            cur, cur_hi = best_v, _upper_float(best_v)
            breakpoints.append(Breakpoint(x, best_v.approx(), best_q))
    return PhiTable(alpha, q_max, tuple(breakpoints))


def phi_at(table: PhiTable, x) -> float:
    """Step-function value; 1 below ``x = 1``."""
    i = table.index_at(x)
    return 1.0 if i is None else table.breakpoints[i].value


class SharpnessPoint(NamedTuple):
    Q: int
    witness: tuple[int, ...]
    reciprocal: float


def sharpness_sequence(table: PhiTable, budget: PrecisionBudget = DEFAULT_BUDGET) -> list[SharpnessPoint]:
    """Breakpoint witnesses ``q_i`` with ``||alpha . q_i||**-1 = Q_i**N / phi(Q_i)``."""
    out = []
    n = table.alpha.n
    for bp in table.breakpoints:
        d = table.alpha.distance(bp.witness, budget).dist
        iv = enclose(d, 64, budget)
        predicted = Fraction(bp.x**n) / Fraction(bp.value)
        lo, hi = 1 / iv.hi, 1 / iv.lo
        slack = hi * Fraction(1, 10**12)
        if not (lo - slack <= predicted <= hi + slack):
            raise InvariantViolation(f"sharpness identity fails at q={bp.witness}")
        out.append(SharpnessPoint(bp.x, bp.witness, float((lo + hi) / 2)))
    return out


class BadApproxCheck(NamedTuple):
    holds: bool
    violation: tuple[int, ...] | None


def constant_phi(c) -> Callable[[int], Fraction]:
    c = Fraction(c)
    return lambda x: c


def verify_phi_badly_approximable(
    alpha: AlphaVector,
    candidate_phi: Callable[[int], object],
    q_max,
    budget: PrecisionBudget = DEFAULT_BUDGET,
) -> BadApproxCheck:
    """Check ``|q|_inf**N ||alpha . q|| >= phi(|q|_inf)`` for ``0 < |q|_inf <= q_max``.

    Returns the violating ``q`` of smallest sup-norm (lexicographically first
    within its shell, first nonzero coordinate positive).
    """
    R0 = math.floor(Fraction(q_max))
    if R0 < 1:
        return BadApproxCheck(True, None)
    levels = [Fraction(candidate_phi(x)) for x in range(R0 + 1)]
    if any(not (0 < v <= 1) for v in levels[1:]):
        raise ValueError("candidate phi must map into (0, 1]")
    if any(a < b for a, b in zip(levels[1:], levels[2:])):
        raise ValueError("candidate phi must be non-increasing")
    R = (R0,) * alpha.n
    fp = kernel.FixedPoint.build(alpha, R, budget)
    lv = np.array([float(v) for v in levels])
    lv_up = np.nextafter(lv, np.inf)
    lv_dn = np.nextafter(lv, -np.inf)
    worst = None  # (shell, index, q)
    for block in kernel.iter_blocks(fp, R, 0, kernel.half_box_size(R)):
        _check_resonance(alpha, block, budget)
        shells, lo, hi = _value_bounds(block, alpha.n)
        unsure = ~((lo > lv_up[shells]) | (hi < lv_dn[shells]))
        bad = hi < lv_dn[shells]
        for i in np.flatnonzero(unsure):
            q = kernel.row(block.q[i])
            if sign(shell_value(alpha, q, budget) - levels[shells[i]], budget) < 0:
                bad[i] = True
        for i in np.flatnonzero(bad):
            key = (int(shells[i]), block.start + int(i))
            if worst is None or key < worst[:2]:
                worst = key + (kernel.row(block.q[i]),)
    if worst is None:
        return BadApproxCheck(True, None)
    return BadApproxCheck(False, worst[2])
