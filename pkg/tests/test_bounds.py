import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracparts.bounds import evaluate_bounds, fit_theorem_constants, shell_difference_check
from fracparts.errors import MissingPhi2Q

phis = st.floats(min_value=1e-6, max_value=1.0)


def by_name(entries):
    return {e.name: e for e in entries}


def test_examples():
    b = by_name(evaluate_bounds(1, 10, 0.381966))
    assert b["thm_upper"].value == pytest.approx(49.20619, abs=1e-5)
    assert b["thm_lower"].value == pytest.approx(float(10 * mpmath.log(mpmath.mpf("3.81966"))), rel=1e-12)
    assert b["lang_1d"].value == b["thm_upper"].value
    assert b["trivial_floor"].value == 40
    assert "gap_upper" not in b
    lv = by_name(evaluate_bounds(1, 1, 0.381966))["lv_lower"]
    assert lv.value == 0 and lv.trivial


def test_missing_phi_2q():
    with pytest.raises(MissingPhi2Q):
        evaluate_bounds(1, 10, 0.5, names=["gap_upper"])
    assert "lang_1d" not in by_name(evaluate_bounds(2, 10, 0.5))


def test_thm_lower_clipped():
    e = by_name(evaluate_bounds(2, 2, 0.1))["thm_lower"]
    assert e.value == 0 and e.trivial


def test_json_schema():
    e = evaluate_bounds(1, 4, 0.5)[0]
    assert list(e.to_json())[:5] == ["name", "value", "n", "q", "phi_q"]


@settings(max_examples=300)
@given(st.integers(1, 4), st.floats(min_value=2, max_value=1e5), phis, phis)
def test_catalog_properties(N, Q, p1, p2):
    phi_q, phi_2q = max(p1, p2), min(p1, p2)
    b = by_name(evaluate_bounds(N, Q, phi_q, phi_2q))
    assert all(math.isfinite(e.value) and e.value >= 0 for e in b.values())
    assert b["thm_upper"].value >= b["thm_lower"].value
    assert b["gap_upper"].value >= Q**N * math.log(Q)
    assert evaluate_bounds(N, Q, phi_q, phi_2q) == evaluate_bounds(N, Q, phi_q, phi_2q)


def test_fit_consistency(golden):
    rep = fit_theorem_constants(golden, [16, 32, 64, 128])
    for r in rep.rows:
        assert rep.fitted_constant_low * max(r.thm_lower, r.q) <= r.s * (1 + 1e-12)
        assert r.s <= rep.fitted_constant_high * r.thm_upper * (1 + 1e-12)
    assert rep.stability >= 1 and rep.fitted_constant_low > 0


def test_fit_single_point(golden):
    rep = fit_theorem_constants(golden, [64])
    assert rep.stability == 1
    assert rep.fitted_constant_low == rep.rows[0].l and rep.fitted_constant_high == rep.rows[0].r


def test_fit_rejects_bad_grid(golden):
    with pytest.raises(ValueError):
        fit_theorem_constants(golden, [1, 4])
    with pytest.raises(ValueError):
        fit_theorem_constants(golden, [8, 4])


def test_shell_check_example(golden):
    rep = shell_difference_check(golden, 100, 1)
    assert rep.K == pytest.approx(math.log2(100 * 0.38196601125), abs=1e-9)
    assert rep.k_range == (1, 2, 3, 4) and rep.holds
    assert rep.lower_bound == 400


def test_shell_check_vacuous(golden):
    rep = shell_difference_check(golden, 2, 1)
    assert rep.k_range == () and rep.holds and rep.min_margin is None
