import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracparts.alpha import parse_alpha
from fracparts.errors import InvariantViolation, PairCapExceeded, Resonance
from fracparts.lattice import count_M
from fracparts.phi import compute_phi_table, phi_at
from fracparts.sums import BoxSpec, dyadic_profile, sandwich_check, sum_reciprocals, verify_gap_principle

import mp_oracle
from conftest import GOLDEN, SQRT2, SQRT2_3


def test_golden_sum(golden):
    r = sum_reciprocals(golden, BoxSpec.cube(3, 1))
    assert r.lower <= 27.416408 + 1e-6 and r.upper >= 27.416408 - 1e-6
    assert r.terms == 6 and r.min_witness == (3,)


@pytest.mark.parametrize("spec,mp_alpha,R", [
    (GOLDEN, [mp_oracle.GOLDEN_MP], 300),
    (SQRT2_3, [mpmath.sqrt(2), mpmath.sqrt(3)], 15),
    ("quad:(2+5*sqrt(3))/7,quad:(1+1*sqrt(11))/2", [(2 + 5 * mpmath.sqrt(3)) / 7, (1 + mpmath.sqrt(11)) / 2], 9),
])
def test_sum_encloses_mpmath(spec, mp_alpha, R):
    r = sum_reciprocals(parse_alpha(spec), BoxSpec.cube(R, len(mp_alpha)))
    exact = mp_oracle.reciprocal_sum(mp_alpha, R)
    assert r.lower <= exact <= r.upper
    assert r.radius <= 1e-9 * r.midpoint


def test_rectangular_box(sqrt23):
    r = sum_reciprocals(sqrt23, BoxSpec((Fraction(3), Fraction(5, 2))))
    exact = mpmath.fsum(
        1 / mp_oracle.dist(a * mpmath.sqrt(2) + b * mpmath.sqrt(3))
        for a in range(-3, 4) for b in range(-2, 3) if a or b
    )
    assert r.lower <= exact <= r.upper and r.terms == 7 * 5 - 1


def test_empty_box_and_resonance(golden):
    r = sum_reciprocals(golden, BoxSpec.cube(Fraction(1, 2), 1))
    assert (r.terms, r.lower, r.upper) == (0, 0.0, 0.0)
    with pytest.raises(Resonance) as exc:
        sum_reciprocals(parse_alpha("rat:1/2"), BoxSpec.cube(2, 1))
    assert exc.value.q == (2,)


@settings(max_examples=25, deadline=None)
@given(st.sampled_from([GOLDEN, SQRT2, SQRT2_3]), st.integers(1, 40))
def test_trivial_floor_and_chunks(spec, Q):
    a = parse_alpha(spec)
    Q = min(Q, 12) if a.n == 2 else Q
    r = sum_reciprocals(a, BoxSpec.cube(Q, a.n))
    assert r.lower >= 2 * ((2 * Q + 1) ** a.n - 1)
    assert sum_reciprocals(a, BoxSpec.cube(Q, a.n), chunks=3, workers=2) == r


def test_profile_examples(golden):
    assert dyadic_profile(golden, 5).shell_counts == {1: 4, 2: 4, 3: 2}
    assert dyadic_profile(golden, 1).shell_counts == {1: 2}


@pytest.mark.parametrize("spec,Q", [(GOLDEN, 60), (SQRT2, 45), (SQRT2_3, 9)])
def test_profile_tails_match_counts(spec, Q):
    a = parse_alpha(spec)
    p = dyadic_profile(a, Q)
    for k in range(1, p.k_max + 2):
        assert p.tail(k) == count_M(a, Fraction(1, 2**k), Q).count
    bound = math.floor(math.log2(Q**a.n / phi_at(compute_phi_table(a, Q), Q)))
    assert max(p.shell_counts) <= bound


@pytest.mark.parametrize("spec,Q", [(GOLDEN, 5), (GOLDEN, 200), (SQRT2, 77), (SQRT2_3, 20), ("rat:1/4", 1), ("rat:1/2", 1)])
def test_sandwich(spec, Q):
    a = parse_alpha(spec)
    rep = sandwich_check(dyadic_profile(a, Q), sum_reciprocals(a, BoxSpec.cube(Q, a.n)))
    assert rep.holds


def test_sandwich_exact_tie_is_not_strict():
    a = parse_alpha("rat:1/4")
    rep = sandwich_check(dyadic_profile(a, 1), sum_reciprocals(a, BoxSpec.cube(1, 1)))
    assert rep.holds and rep.lower_sum == 8 and not rep.strict


@pytest.mark.parametrize("spec", [GOLDEN, SQRT2])
@pytest.mark.parametrize("Q", [5, 20, 50])
def test_gap_principle(spec, Q):
    rep = verify_gap_principle(parse_alpha(spec), Q)
    assert rep.holds and rep.min_pairwise_separation >= rep.floor and rep.min_value >= rep.floor


def test_gap_example(golden):
    rep = verify_gap_principle(golden, 5)
    assert rep.min_pairwise_separation == pytest.approx(0.055728, abs=1e-6)
    assert rep.floor == pytest.approx(0.0381966, abs=1e-7)


def test_gap_against_brute_force(sqrt23):
    rep = verify_gap_principle(sqrt23, 4)
    vals = sorted({float(d) for q, d in mp_oracle.vectors([mpmath.sqrt(2), mpmath.sqrt(3)], 4)})
    assert rep.min_pairwise_separation == pytest.approx(min(b - a for a, b in zip(vals, vals[1:])), rel=1e-9)


def test_gap_pair_cap(golden):
    with pytest.raises(PairCapExceeded):
        verify_gap_principle(golden, 100, pair_cap=10)
