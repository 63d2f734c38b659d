"""Brute-force double loop over ``(p, q)``, independent of the fixed-point kernel.

Every pair in the full box ``[-R, R]**N x [-P, P]`` is tested in float64
against ``|alpha . q + p| <= eps`` with a rigorous error margin; pairs within
the margin are decided exactly.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np

from .alpha import AlphaVector
from .errors import OutputCapExceeded
from .realnum import DEFAULT_BUDGET, PrecisionBudget, decide, enclose

_U = 2.0**-52


def p_reach(alpha: AlphaVector, R, eps) -> int:
    """Largest ``|p|`` that can satisfy ``|alpha . q + p| <= eps`` inside the box."""
    reach = sum(m * r for m, r in zip(alpha.magnitude_bounds(), R)) + Fraction(eps)
    return math.ceil(reach) + 1


def _alpha_floats(alpha: AlphaVector):
    mids, errs = [], []
    for a in alpha.reals:
        iv = enclose(a, 64)
        f = float(iv.midpoint)
        mids.append(f)
        errs.append(float(abs(Fraction(f) - iv.midpoint) + iv.radius + a.radius) * 2 + 2.0**-60)
    return np.array(mids), np.array(errs)


def naive_pairs(
    alpha: AlphaVector,
    eps,
    Q,
    budget: PrecisionBudget = DEFAULT_BUDGET,
    include_origin: bool = False,
    cap: int = 10**7,
    batch: int = 1 << 12,
):
    """All ``(p, q)`` with ``|alpha . q + p| <= eps`` and ``|q|_inf <= Q``.

    ``q = 0`` rows are scanned too; ``(0, 0)`` is kept only when
    ``include_origin`` is set. Pairs are ordered by ``(q, p)``.
    """
    eps = Fraction(eps)
    R = math.floor(Fraction(Q))
    n = alpha.n
    P = p_reach(alpha, (R,) * n, eps)
    ps = np.arange(-P, P + 1, dtype=np.float64)
    af, aerr = _alpha_floats(alpha)
    eps_f = float(eps)
    out = []
    qs = np.array(list(itertools.product(range(-R, R + 1), repeat=n)), dtype=np.int64).reshape(-1, n)
    for s in range(0, len(qs), batch):
        q = qs[s : s + batch]
        qf = q.astype(np.float64)
        x = qf @ af
        margin = np.abs(qf) @ aerr + 8 * _U * (np.abs(qf) @ np.abs(af) + P + 1)
        v = np.abs(x[:, None] + ps[None, :])
        inside = v <= eps_f - margin[:, None]
        unsure = ~inside & (v <= eps_f + margin[:, None])
        for i, j in zip(*np.nonzero(unsure)):
            qi = tuple(int(t) for t in q[i])
            p = int(ps[j])
            lhs = alpha.dot(qi) + p
            if decide(lhs, "<=", eps, budget) and decide(lhs, ">=", -eps, budget):
                inside[i, j] = True
        for i, j in zip(*np.nonzero(inside)):
            qi = tuple(int(t) for t in q[i])
            p = int(ps[j])
            if not include_origin and p == 0 and not any(qi):
                continue
            out.append((p, qi))
            if len(out) > cap:
                raise OutputCapExceeded(f"more than {cap} pairs")
    out.sort(key=lambda pq: (pq[1], pq[0]))
    return out


def naive_count(alpha: AlphaVector, eps, Q, budget: PrecisionBudget = DEFAULT_BUDGET) -> int:
    """``|M(alpha, eps, Q)|`` by the double loop."""
    return len(naive_pairs(alpha, eps, Q, budget))
