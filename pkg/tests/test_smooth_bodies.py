import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from convexval.bodies import (as_body, ball, ball_surrogate, circle_directions, curvature_range,
                              decompose_difference, ellipsoid, gradient_point, harmonic,
                              inscribed_polytope, point_body, polar_function, radii_of_curvature,
                              reconstruction_residual, smoothed_polytope, unit_ball_volume,
                              validate_support)
from convexval.density import Density, integrate_density
from convexval.errors import ConvexityError
from convexval.polytope import Polytope

angles = st.floats(0, 2 * math.pi, allow_nan=False)


def _dir(t):
    return np.array([math.cos(t), math.sin(t)])


def test_ball_support_and_gradient():
    b = ball(2.0)
    u = np.array([0.6, 0.8])
    assert b.h(u) == pytest.approx(2.0)
    assert np.allclose(b.grad(u), 2 * u)


def test_ellipse_curvature_range():
    e = ellipsoid(1.5, 0.75)
    assert radii_of_curvature(e, np.array([1.0, 0.0]))[0] == pytest.approx(0.75 ** 2 / 1.5)
    cr = curvature_range([e], [1.0])
    assert cr.kmin == pytest.approx(1 / 3)
    assert cr.kmax == pytest.approx(1 / 0.375)


def test_validation_accepts_ball_and_rejects_trefoil():
    assert validate_support(ball(1.0))["ok"]
    bumpy = polar_function(lambda t: 1 + 0.9 * np.cos(3 * t), lambda t: -2.7 * np.sin(3 * t),
                           lambda t: -8.1 * np.cos(3 * t))
    with pytest.raises(ConvexityError):
        as_body(bumpy)


def test_difference_of_bodies_reconstructs_function():
    f = harmonic(3, 0.5, 0.0)
    a1, a2, t = decompose_difference(f)
    assert t > 0
    assert reconstruction_residual(f, a1, a2) < 1e-12


def test_smoothed_square_adds_radius():
    sq = Polytope.box([0, 0], [1, 1])
    assert smoothed_polytope(sq, 0.1).h(np.array([0.6, 0.8])) == pytest.approx(1.5)


def test_point_body_support_is_zero():
    assert point_body(2).h(np.array([0.0, 1.0])) == 0


def test_inscribed_hexagon_area():
    p = inscribed_polytope(ball(1.0), circle_directions(6))
    assert p.volume() == pytest.approx(3 * math.sqrt(3) / 2, rel=1e-14)


def test_rational_ball_surrogate_is_exact_and_close():
    d = ball_surrogate(2, 64)
    assert all(isinstance(c, F) for v in d.vertices for c in v)
    assert float(d.volume()) == pytest.approx(math.pi, rel=1e-2)


def test_unit_ball_volume():
    assert unit_ball_volume(3) == pytest.approx(4 * math.pi / 3)


def test_polynomial_density_integral():
    sq = Polytope.box([0, 0], [1, 1])
    d = Density.from_terms(2, [((1, 0), 1), ((0, 2), 3)])
    assert integrate_density(sq, d) == F(3, 2)


@settings(max_examples=50, deadline=None)
@given(angles, st.floats(0.3, 3.0), st.floats(0.3, 3.0))
def test_gradient_point_is_the_supporting_point(t, a, b):
    e = ellipsoid(a, b)
    u = _dir(t)
    x = gradient_point(e, u)
    # supporting point lies on the ellipse and realises h(u)
    assert (x[0] / a) ** 2 + (x[1] / b) ** 2 == pytest.approx(1.0, abs=1e-9)
    assert float(np.dot(x, u)) == pytest.approx(e.h(u), abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(angles, angles, st.floats(0.2, 4.0))
def test_support_function_is_sublinear(s, t, r):
    e = ellipsoid(1.5, 0.75)
    u, v = _dir(s), _dir(t)
    assert e.h(u + v) <= e.h(u) + e.h(v) + 1e-12
    assert e.h(r * u) == pytest.approx(r * e.h(u))
