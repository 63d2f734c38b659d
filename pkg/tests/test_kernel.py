import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracparts import kernel
from fracparts.alpha import parse_alpha
from fracparts.realnum import sign


@pytest.mark.parametrize("R", [(0,), (3,), (2, 1), (1, 2, 1)])
def test_half_box_is_lexicographic_positive_half(R):
    full = list(itertools.product(*(range(-r, r + 1) for r in R)))
    pos = [q for q in full if any(q) and next(c for c in q if c) > 0]
    rows = [tuple(int(v) for v in r) for r in kernel.half_box(R, 0, kernel.half_box_size(R))]
    assert rows == sorted(pos)
    assert kernel.half_box_size(R) == len(pos)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 500), st.integers(1, 20))
def test_chunk_ranges_partition(total, chunks):
    ranges = kernel.chunk_ranges(total, chunks)
    assert ranges[0][0] == 0 and ranges[-1][1] == total
    assert all(a[1] == b[0] for a, b in zip(ranges, ranges[1:]))


def test_map_chunks_reports_earliest_failure():
    def fn(s, e):
        if s >= 4:
            raise ValueError(f"chunk {s}")
        return e - s

    with pytest.raises(ValueError, match="chunk 4"):
        kernel.map_chunks(fn, 12, chunks=6, workers=3)
    assert kernel.map_chunks(lambda s, e: e - s, 10, chunks=3, workers=2) == [3, 3, 4]


@pytest.mark.parametrize("spec,R", [
    ("quad:(1+1*sqrt(5))/2", (200,)),
    ("quad:(0+1*sqrt(2))/1,quad:(0+1*sqrt(3))/1", (12, 12)),
    ("quad:(3+7*sqrt(11))/5,rat:2/9", (10, 10)),
    ("dec:0.7071067811865@60", (100,)),
])
def test_fixed_point_bounds_contain_exact_distance(spec, R):
    alpha = parse_alpha(spec)
    fp = kernel.FixedPoint.build(alpha, R)
    scale = 1 << fp.bits
    for block in kernel.iter_blocks(fp, R, 0, kernel.half_box_size(R), rows=37):
        for i in range(len(block.q)):
            q = kernel.row(block.q[i])
            d = alpha.distance(q).dist
            lo, hi = Fraction(int(block.lo_units[i]), scale), Fraction(int(block.hi_units[i]), scale)
            if alpha.exact:
                assert sign(d - lo) >= 0 and sign(hi - d) >= 0
            else:
                assert lo - d.radius <= d.center.rational_part() <= hi + d.radius
            assert float(block.lo_float()[i]) <= float(d) <= float(block.hi_float()[i]) + 1e-300


def test_threshold_units():
    assert kernel.threshold_units(Fraction(1, 4), 10) == 256
    assert kernel.threshold_units(Fraction(1, 3), 2) == 1
