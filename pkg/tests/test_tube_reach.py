from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from convexval.bodies import ball, ball_surrogate, ellipsoid
from convexval.charts import Chart
from convexval.polytope import Polytope, convex_hull
from convexval.reach import (domain_grid, image_reach, reach_bound, reach_estimate,
                             reach_estimate_polytope_or_points)
from convexval.suites import random_polygon
from convexval.tube import steiner_residual, tube_injectivity_check, tube_polynomial, tube_pullback_eval
from convexval.valuation import GeneratorValuation, eval_valuation

SQ = Polytope.box([0, 0], [1, 1])
TWO_POINTS = np.array([[0.0, 0.0], [2.0, 0.0]])
seeds = st.integers(0, 10_000)


def test_square_tube_polynomial_is_exact():
    d = ball_surrogate(2, 16)
    coeffs = tube_polynomial(SQ, d)
    assert coeffs[0] == 1 and coeffs[2] == d.volume()
    assert steiner_residual(SQ, d, F(1, 3), coeffs) == 0


def test_pullback_matches_generator_on_disk_term():
    v = GeneratorValuation.single(2, [ball(1.0)])
    assert tube_pullback_eval(v, SQ).value == pytest.approx(4.0, rel=1e-12)


def test_pullback_rejects_polytope_bodies():
    with pytest.raises(TypeError):
        tube_pullback_eval(GeneratorValuation.single(2, [SQ]), SQ)


def test_pullback_with_ellipse_agrees_with_generator():
    v = GeneratorValuation.single(2, [ellipsoid(1.5, 0.75)])
    k = convex_hull([(0, 0), (3, 0), (1, 2)])
    assert float(tube_pullback_eval(v, k).value) == pytest.approx(float(eval_valuation(v, k)), rel=1e-6)


def test_two_points_injective_below_reach():
    v = tube_injectivity_check(TWO_POINTS, ball(1.0), 0.9, samples=20_000)
    assert v.collisions == 0
    assert v.threshold == pytest.approx(1.0)


def test_two_points_collide_beyond_reach():
    v = tube_injectivity_check(TWO_POINTS, ball(1.0), 1.2, samples=20_000)
    assert v.collisions > 0
    assert v.verdict == "collisions-beyond-threshold"


def test_reach_of_point_sets_and_circle():
    assert reach_estimate_polytope_or_points(TWO_POINTS) == pytest.approx(1.0)
    th = np.linspace(0, 2 * np.pi, 400, endpoint=False)
    pts = np.c_[np.cos(th), np.sin(th)]
    assert reach_estimate(pts, normals=pts).value == pytest.approx(1.0, rel=1e-6)


def test_convex_image_has_infinite_reach_above_bound():
    g = Chart.quadratic(np.zeros((2, 2, 2)) + 0.02)
    k = convex_hull([(0, 0), (1, 0), (0, 1)])
    bound = reach_bound(g, k, 0.5, grid=domain_grid(k, 0.5, 20))
    assert 0 < bound < image_reach(g, k, per_edge=100)


@settings(max_examples=15, deadline=None)
@given(seeds, st.fractions(0, 2, max_denominator=8))
def test_steiner_exact_for_random_polygons(seed, lam):
    p = random_polygon(np.random.default_rng(seed))
    assert steiner_residual(p, ball_surrogate(2, 32), lam) == 0


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_reach_bound_holds_for_small_quadratic_maps(seed):
    rng = np.random.default_rng(seed)
    k = random_polygon(rng, points=6, scale=2)
    g = Chart.quadratic(rng.normal(size=(2, 2, 2)) * 0.05)
    bound = reach_bound(g, k, 0.5, grid=domain_grid(k, 0.5, 20))
    assert image_reach(g, k, per_edge=150) >= (1 - 1e-3) * bound
