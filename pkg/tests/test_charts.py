from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from convexval.bodies import ball
from convexval.charts import (Chart, ChartedValuation, biconvex_bodies, chart_image,
                              chart_independence_check, is_image_convex, place, pushforward_affine,
                              pushforward_eval, restrict_and_glue, slice_identity_check)
from convexval.errors import GluingError
from convexval.polytope import Polytope, convex_hull
from convexval.suites import random_rational_polytope
from convexval.valuation import GeneratorValuation, eval_valuation, euler_generator

SQ = Polytope.box([0, 0], [1, 1])
SHEAR = Chart.parse("affine:[[2,1],[0,1]],[1,0]")
VOL = GeneratorValuation.volume(2)
TRI = convex_hull([(-1, -1), (2, 0), (0, 1)])
QUAD = convex_hull([(-1, 0), (0, -1), (1, 0), (0, 2)])
seeds = st.integers(0, 10_000)


def test_parse_and_exact_affine_inverse():
    assert SHEAR.kind == "affine"
    inv = SHEAR.inverse_chart()
    assert inv.matrix == [[F(1, 2), F(-1, 2)], [0, 1]]
    assert SHEAR.compose(inv).matrix == [[1, 0], [0, 1]]


def test_low_degree_polyshear_is_affine():
    assert Chart.parse("polyshear:1,2").kind == "affine"


def test_nonlinear_polyshear_round_trip():
    c = Chart.parse("polyshear:0,0,1")
    assert c.kind == "nonlinear"
    assert np.allclose(c.forward([1, 2]), [1, 3])
    err, min_det = c.validate()
    assert err < 1e-12 and min_det > 0


def test_unknown_chart_kind():
    with pytest.raises(ValueError):
        Chart.parse("spiral:1")


def test_affine_image_and_pushforward():
    assert chart_image(SHEAR, SQ).volume() == 2
    assert pushforward_eval(VOL, SHEAR, SQ) == F(1, 2)


def test_pushforward_under_dilation():
    from convexval.intrinsic import intrinsic_volume
    from convexval.valuation import intrinsic_generator

    v1 = intrinsic_generator(2, 1)
    pushed = pushforward_affine(v1, [[2, 0], [0, 2]], [0, 0])
    assert eval_valuation(pushed, SQ.scale(2)) == eval_valuation(v1, SQ)


def test_disk_image_stays_convex_under_mild_shear():
    assert is_image_convex(ball(1.0), Chart.parse("polyshear:0,0,1").forward)


def test_affine_chart_independence():
    g = Chart.affine([[1, F(1, 5)], [F(-1, 10), F(6, 5)]], [F(3, 10), 0])
    for phi, psi in ((euler_generator(2), GeneratorValuation.single(2, [TRI]) + VOL),
                     (GeneratorValuation.single(2, [TRI]), GeneratorValuation.single(2, [QUAD]))):
        assert chart_independence_check(phi, psi, Chart.identity(2), g, SQ)[0] <= 1e-9


def test_nonlinear_residual_shrinks_with_body_size():
    q = Chart.quadratic(np.random.default_rng(5).normal(size=(2, 2, 2)) * 0.15)
    phi, psi = GeneratorValuation.single(2, [TRI]), GeneratorValuation.single(2, [QUAD])
    center = (0.1, -0.2)
    assert biconvex_bodies(Chart.identity(2), q, ball(1.0), [0.1], centers=[center])
    res = [chart_independence_check(phi, psi, Chart.identity(2), q, place(ball(1.0), e, center))[0]
           for e in (0.1, 0.05)]
    assert res[1] < res[0] < 1e-2


def test_gluing_accepts_compatible_and_refuses_mismatch():
    good = ChartedValuation([Chart.identity(2), SHEAR], [VOL, pushforward_affine(VOL, SHEAR.matrix, SHEAR.offset)])
    glued = restrict_and_glue(good, [0, 1], test_bodies=[SQ, TRI])
    assert all(e["residual"] <= 1e-12 for e in glued.log)
    bad = ChartedValuation([Chart.identity(2), SHEAR], [VOL, VOL])
    with pytest.raises(GluingError):
        restrict_and_glue(bad, [0, 1], test_bodies=[SQ])


def test_slice_identity_on_square():
    t = Polytope.box([0, 0], [2, 2])
    a = convex_hull([(0,), (1,)])
    b = convex_hull([(F(1, 2),), (3,)])
    assert slice_identity_check(t, a, b, (F(1, 2),)) == 0


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_slice_identity_random_line_instances(seed):
    rng = np.random.default_rng(seed)
    t = random_rational_polytope(rng, 2, 6)
    a = random_rational_polytope(rng, 1, 3, scale=2)
    b = random_rational_polytope(rng, 1, 3, scale=2)
    x0 = tuple(F(int(c), 2) for c in rng.integers(-4, 5, 1))
    assert slice_identity_check(t, a, b, x0) == 0


@settings(max_examples=25, deadline=None)
@given(st.integers(-5, 5), st.integers(-5, 5), st.integers(1, 5), st.integers(1, 5))
def test_affine_compose_inverse_is_identity(b12, b21, d1, d2):
    m = [[d1, F(b12, 3)], [F(b21, 7), d2 + F(b12 * b21, 21)]]
    c = Chart.affine(m, [1, -2])
    ident = c.compose(c.inverse_chart())
    assert ident.matrix == [[1, 0], [0, 1]]
    assert list(ident.offset) == [0, 0]
