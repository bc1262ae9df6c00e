from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from convexval.errors import DimensionError, EmptyInputError
from convexval.plcycle import (PLConvexFunction, convex_minimum, differential_cycle, interchange_matches,
                               is_closed, maxmin_additivity_check, random_convex_min_pair)
from convexval.polytope import convex_hull

seeds = st.integers(0, 10_000)


def test_abs_value_cycle():
    f = PLConvexFunction.from_pieces(1, [((1,), 0), ((-1,), 0)])
    c = differential_cycle(f)
    assert is_closed(c)
    kinds = sorted(cell.kind for cell in c.cells)
    assert kinds == ["horizontal", "horizontal", "vertical"]


def test_inactive_pieces_are_dropped():
    f = PLConvexFunction.from_pieces(1, [((1,), 0), ((-1,), 0), ((0,), -5)])
    assert len(f.pieces) == 2
    assert f((F(3),)) == 3


def test_invalid_functions_rejected():
    with pytest.raises(DimensionError):
        PLConvexFunction(3, (((1, 0, 0), 0),))
    with pytest.raises(EmptyInputError):
        PLConvexFunction(1, ())


def test_support_function_of_polygon_matches_conic_cycle():
    assert interchange_matches(convex_hull([(0, 0), (2, 0), (1, 1)]))


@pytest.mark.parametrize("dim", [1, 2])
def test_fixed_pair_identity(dim):
    f, g = random_convex_min_pair(dim, np.random.default_rng(11))
    assert maxmin_additivity_check(f, g, forms=10) == 0


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_maxmin_identity_on_the_line(seed):
    f, g = random_convex_min_pair(1, np.random.default_rng(seed))
    assert maxmin_additivity_check(f, g, forms=10, seed=seed) == 0
    for h in (f, g, f.maximum(g), convex_minimum(f, g)):
        assert is_closed(differential_cycle(h))
