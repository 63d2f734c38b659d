"""Vectorised enumeration of ``||alpha . q||`` over integer boxes.

Coordinates of alpha are replaced by ``A_i = floor(alpha_i * 2**b)``, so
``alpha . q * 2**b`` lies within ``E = sum(|q_i| * e_i)`` of the exact int64
``X = q @ A``. Every distance therefore comes as a pair of integers
``(D, E)`` with ``||alpha . q|| * 2**b`` in ``[D - E, D + E]``. Callers
decide what they can from those bounds and hand the rest (rows whose bounds
straddle a threshold) to the exact routines in :mod:`fracparts.realnum`.

Only the half box is enumerated: rows are the lexicographically positive
``q`` (first nonzero coordinate > 0), in lexicographic order. ``-q`` has the
same distance, so callers double.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, Sequence, TypeVar

import numpy as np

from .alpha import AlphaVector
from .realnum import DEFAULT_BUDGET, PrecisionBudget, Real, floor_exact

T = TypeVar("T")

BLOCK_ROWS = 1 << 17
_INT64_HEADROOM = 1 << 62


def box_radii(radii) -> tuple[int, ...]:
    """Integer radii ``floor(Q_i)`` of a box given by real radii."""
    out = []
    for r in radii:
        r = Fraction(r) if not isinstance(r, float) else Fraction(r)
        if r < 0:
            raise ValueError("box radii must be non-negative")
        out.append(math.floor(r))
    return tuple(out)


def half_box_size(R: Sequence[int]) -> int:
    return (math.prod(2 * r + 1 for r in R) - 1) // 2


def half_box(R: Sequence[int], start: int, stop: int) -> np.ndarray:
    """Rows ``start:stop`` of the lexicographically positive half box."""
    dims = tuple(2 * r + 1 for r in R)
    centre = (math.prod(dims) - 1) // 2
    idx = np.arange(centre + 1 + start, centre + 1 + stop, dtype=np.int64)
    coords = np.unravel_index(idx, dims)
    return np.stack(coords, axis=1).astype(np.int64) - np.asarray(R, dtype=np.int64)


def chunk_ranges(total: int, chunks: int) -> list[tuple[int, int]]:
    chunks = max(1, int(chunks))
    bounds = [total * i // chunks for i in range(chunks + 1)]
    return [(bounds[i], bounds[i + 1]) for i in range(chunks)]


def map_chunks(fn: Callable[[int, int], T], total: int, chunks: int = 1, workers: int = 1) -> list[T]:
    """Apply ``fn(start, stop)`` to each chunk; results come back in chunk order.

    If several chunks raise, the exception of the earliest chunk wins, so the
    reported error does not depend on scheduling.
    """
    ranges = chunk_ranges(total, chunks)

    def guarded(r):
        try:
            return fn(*r), None
        except Exception as exc:  # re-raised below in chunk order
            return None, exc

    if workers > 1 and len(ranges) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(guarded, ranges))
    else:
        outcomes = []
        for r in ranges:
            outcomes.append(guarded(r))
            if outcomes[-1][1] is not None:
                break
    results = []
    for value, exc in outcomes:
        if exc is not None:
            raise exc
        results.append(value)
    return results


@dataclass(frozen=True)
class FixedPoint:
    bits: int
    coeffs: np.ndarray
    errs: np.ndarray

    @classmethod
    def build(cls, alpha: AlphaVector, R: Sequence[int], budget: PrecisionBudget = DEFAULT_BUDGET) -> "FixedPoint":
        mags = alpha.magnitude_bounds()
        reach = sum(r * (m + 2) for r, m in zip(R, mags)) + 1
        bits = min(60, 61 - math.ceil(math.log2(reach)))
        while bits >= 8:
            scale = 1 << bits
            coeffs, errs = [], []
            for a in alpha.reals:
                f, _ = floor_exact(Real(a.center) * scale, budget)
                coeffs.append(f)
                errs.append(1 + math.ceil(a.radius * scale))
            worst = sum(r * (abs(c) + e) for r, c, e in zip(R, coeffs, errs)) + scale
            if worst < _INT64_HEADROOM:
                return cls(bits, np.array(coeffs, dtype=np.int64), np.array(errs, dtype=np.int64))
            bits -= 1
        raise ValueError("box too large for the fixed-point kernel")


@dataclass
class Block:
    """Distance bounds for the half-box rows ``start .. start + len(q)``."""

    start: int
    q: np.ndarray
    dist: np.ndarray
    err: np.ndarray
    nearest: np.ndarray
    bits: int

    @property
    def lo_units(self) -> np.ndarray:
        return np.maximum(self.dist - self.err, 0)

    @property
    def hi_units(self) -> np.ndarray:
        return self.dist + self.err

    def nearest_known(self) -> np.ndarray:
        """Rows whose nearest integer is certain (no half-integer within reach)."""
        return self.dist + self.err < (1 << (self.bits - 1))

    def lo_float(self) -> np.ndarray:
        v = np.nextafter(self.lo_units.astype(np.float64), -np.inf)
        return np.ldexp(np.maximum(v, 0.0), -self.bits)

    def hi_float(self) -> np.ndarray:
        v = np.nextafter(self.hi_units.astype(np.float64), np.inf)
        return np.minimum(np.ldexp(v, -self.bits), 0.5)


def compute_block(fp: FixedPoint, q: np.ndarray, start: int) -> Block:
    b = fp.bits
    X = q @ fp.coeffs
    r = X & ((1 << b) - 1)
    D = np.minimum(r, (1 << b) - r)
    nearest = (X >> b) + (r > (1 << (b - 1)))
    E = np.abs(q) @ fp.errs
    return Block(start, q, D, E, nearest, b)


def iter_blocks(fp: FixedPoint, R: Sequence[int], start: int, stop: int, rows: int = BLOCK_ROWS) -> Iterator[Block]:
    for s in range(start, stop, rows):
        e = min(stop, s + rows)
        yield compute_block(fp, half_box(R, s, e), s)


def threshold_units(value: Fraction, bits: int) -> int:
    """``floor(value * 2**bits)``: ``D+E <= t`` proves ``<= value``, ``D-E > t`` proves ``> value``."""
    value = Fraction(value)
    return (value.numerator << bits) // value.denominator


def row(q: np.ndarray) -> tuple[int, ...]:
    return tuple(int(v) for v in q)
