import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracparts.alpha import parse_alpha
from fracparts.errors import (
    DimensionMismatch,
    NonsquareViolation,
    ParseError,
    PrecisionExhausted,
    ZeroDenominator,
)
from fracparts.realnum import (
    DecimalLiteral,
    PrecisionBudget,
    QuadraticSurd,
    Rational,
    Real,
    SurdSum,
    decide,
    dist_nearest_int,
    enclose,
    eval_real,
    floor_exact,
    inner_product,
    nearest_distance,
    sign,
    squarefree_split,
)

mpmath.mp.dps = 60

nonsquare = st.integers(2, 500).filter(lambda d: int(d**0.5) ** 2 != d and (int(d**0.5) + 1) ** 2 != d)


def mp_of(spec):
    if isinstance(spec, Rational):
        return mpmath.mpf(spec.numerator) / spec.denominator
    return (spec.a + spec.b * mpmath.sqrt(spec.d)) / spec.c


def test_rational_width():
    iv = eval_real(Rational(3, 7), 64)
    assert iv.contains(Fraction(3, 7))
    assert iv.width <= Fraction(1, 2**63)


def test_golden_against_mpmath():
    iv = eval_real(QuadraticSurd(1, 1, 5, 2), 64)
    g = (1 + mpmath.sqrt(5)) / 2
    assert mpmath.mpf(iv.lo.numerator) / iv.lo.denominator <= g <= mpmath.mpf(iv.hi.numerator) / iv.hi.denominator
    assert abs(float(iv.midpoint) - 1.6180339887498949) < 1e-15


def test_decimal_keeps_declared_uncertainty():
    iv = eval_real(DecimalLiteral("1.5", 64), 64)
    assert iv.midpoint == Fraction(3, 2)
    assert iv.radius >= Fraction(1, 20)


def test_normalisation():
    assert Rational(6, -4) == Rational(-3, 2)
    s = QuadraticSurd(2, 4, 5, 6)
    assert (s.a, s.b, s.d, s.c) == (1, 2, 5, 3)
    with pytest.raises(NonsquareViolation):
        QuadraticSurd(1, 1, 4, 2)
    with pytest.raises(ZeroDenominator):
        Rational(1, 0)
    with pytest.raises(ValueError):
        DecimalLiteral("1.5", 4)


def test_bits_floor():
    with pytest.raises(ValueError):
        eval_real(Rational(1, 3), 7)


def test_enclosure_soundness_million_rationals():
    rng = random.Random(20261017)
    bits_choices = (8, 13, 32, 64, 100, 200)
    for _ in range(10**6):
        p = rng.randint(-(10**15), 10**15)
        q = rng.randint(1, 10**15)
        iv = eval_real(Rational(p, q), rng.choice(bits_choices))
        x = Fraction(p, q)
        assert iv.lo <= x <= iv.hi


@settings(max_examples=150, deadline=None)
@given(st.integers(-50, 50), st.integers(-50, 50).filter(bool), nonsquare, st.integers(1, 40), st.sampled_from([8, 30, 64, 150]))
def test_surd_enclosure_and_width(a, b, d, c, bits):
    spec = QuadraticSurd(a, b, d, c)
    iv = eval_real(spec, bits)
    x = mp_of(spec)
    lo = mpmath.mpf(iv.lo.numerator) / iv.lo.denominator
    hi = mpmath.mpf(iv.hi.numerator) / iv.hi.denominator
    assert lo <= x <= hi
    assert iv.width <= Fraction(2, 2**bits) * max(1, abs(iv.midpoint))


@settings(max_examples=100, deadline=None)
@given(st.integers(-50, 50), st.integers(-50, 50).filter(bool), nonsquare, st.integers(1, 40), st.integers(8, 120))
def test_monotone_refinement(a, b, d, c, bits):
    spec = QuadraticSurd(a, b, d, c)
    assert eval_real(spec, bits).contains_interval(eval_real(spec, 2 * bits))


@settings(max_examples=100, deadline=None)
@given(st.integers(-(10**6), 10**6), st.integers(1, 10**4), st.sampled_from([9, 20, 64]))
def test_monotone_refinement_decimal(m, scale, bits):
    spec = DecimalLiteral(f"{m / scale:.6f}", bits)
    assert eval_real(spec, 16).contains_interval(eval_real(spec, 64))


@settings(max_examples=200, deadline=None)
@given(st.fractions(max_denominator=10**6).filter(lambda x: abs(x) < 10**6), st.integers(-100, 100))
def test_distance_symmetry_and_shift(x, k):
    d = nearest_distance(Real(x)).dist
    assert nearest_distance(Real(-x)).dist.center == d.center
    assert nearest_distance(Real(x + k)).dist.center == d.center
    v = d.center.rational_part()
    assert 0 <= v <= Fraction(1, 2)


@settings(max_examples=100, deadline=None)
@given(st.integers(-30, 30), st.integers(-30, 30).filter(bool), nonsquare, st.integers(1, 30), st.integers(-5, 5))
def test_distance_of_surds(a, b, d, c, k):
    x = QuadraticSurd(a, b, d, c).to_real()
    d0 = nearest_distance(x).dist
    assert sign(nearest_distance(-x).dist - d0) == 0
    assert sign(nearest_distance(x + k).dist - d0) == 0
    mp = mp_of(QuadraticSurd(a, b, d, c))
    assert abs(float(d0) - float(abs(mp - mpmath.nint(mp)))) < 1e-12


def test_dist_examples():
    r = dist_nearest_int(eval_real(Rational(9, 4), 64))
    assert (r.interval.midpoint, r.nearest_int, r.tie) == (Fraction(1, 4), 2, False)
    r = dist_nearest_int(eval_real(Rational(-3, 10), 64))
    assert r.interval.contains(Fraction(3, 10)) and r.nearest_int == 0 and not r.tie
    r = dist_nearest_int(eval_real(Rational(1, 2), 64))
    assert r.tie and r.interval.contains(Fraction(1, 2))


@settings(max_examples=200, deadline=None)
@given(st.fractions(min_value=-100, max_value=100, max_denominator=1000), st.sampled_from([8, 20, 64]))
def test_dist_interval_sound(x, bits):
    r = dist_nearest_int(eval_real(Rational(x.numerator, x.denominator), bits))
    exact = abs(x - round(x))
    assert r.interval.lo <= exact <= r.interval.hi
    assert 0 <= r.interval.lo and r.interval.hi <= Fraction(1, 2)


def test_inner_product():
    a = parse_alpha("quad:(0+1*sqrt(2))/1,quad:(0+1*sqrt(3))/1")
    iv = inner_product(a, (1, 1), 64)
    exact = mpmath.sqrt(2) + mpmath.sqrt(3)
    assert mpmath.mpf(iv.lo.numerator) / iv.lo.denominator <= exact <= mpmath.mpf(iv.hi.numerator) / iv.hi.denominator
    assert f"{float(iv.midpoint):.10f}" == "3.1462643699"
    zero = inner_product(a, (0, 0), 64)
    assert zero.midpoint == 0 and zero.radius == 0
    three = inner_product(parse_alpha("rat:3/7"), (7,), 64)
    assert three.midpoint == 3 and three.radius == 0
    with pytest.raises(DimensionMismatch):
        inner_product(a, (1,), 64)


def test_decide():
    g = QuadraticSurd(1, 1, 5, 2).to_real()
    assert decide(nearest_distance(g).dist, "<=", Fraction(1, 4)) is False
    assert decide(Real(0), "<=", 0) is True
    with pytest.raises(PrecisionExhausted):
        decide(DecimalLiteral("0.5", 8).to_real(), "<=", Fraction(1, 2))


def test_exact_decisions_escalate_past_budget():
    # the gap is ~1.6e-12, far below a 16-bit ceiling; exact values refine past it
    tiny = PrecisionBudget(start_bits=8, max_bits=16)
    x = SurdSum.sqrt(2) - SurdSum.rational(Fraction(665857, 470832))
    assert sign(Real(x), tiny) == -1


def test_surd_zero_and_squarefree():
    assert squarefree_split(72) == (6, 2)
    x = SurdSum.sqrt(8) - SurdSum.sqrt(2, 2)
    assert x.is_zero()
    y = SurdSum.sqrt(2) * SurdSum.sqrt(3) - SurdSum.sqrt(6)
    assert y.is_zero()


def test_floor_exact():
    assert floor_exact(Real(Fraction(7, 2))) == (3, False)
    assert floor_exact(Real(3)) == (3, True)
    assert floor_exact(QuadraticSurd(0, -1, 2, 1).to_real()) == (-2, False)


def test_enclose_nested_for_decimal():
    x = DecimalLiteral("3.14159", 40).to_real()
    assert enclose(x, 10).contains_interval(enclose(x, 20))


def test_parse_errors_have_position():
    with pytest.raises(ParseError) as exc:
        parse_alpha("rat:1/2,bogus")
    assert exc.value.position == 8
