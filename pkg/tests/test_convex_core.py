from fractions import Fraction as F
import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from convexval import scalar as sc
from convexval.errors import DegenerateError, DimensionError, EmptyInputError, EmptyIntersectionError
from convexval.extract import tensor_interpolate
from convexval.hull import hull_exact, hull_float, qhull_volume
from convexval.intrinsic import intrinsic_volume
from convexval.poly import Polynomial
from convexval.polytope import (Polytope, affine_image, clip, convex_hull, halfspace_intersection,
                                intersect, minkowski_sum)
from convexval.quadrature import grundmann_moeller, integrate_on_simplex

lattice = st.tuples(st.integers(-6, 6), st.integers(-6, 6))
point_sets = st.lists(lattice, min_size=3, max_size=12, unique=True)


def _full(points):
    p = convex_hull(points)
    return p if p.is_full_dimensional else None


def test_box_volume_and_vertices():
    sq = Polytope.box([0, 0], [1, 1])
    assert sq.volume() == 1
    assert sq.nvertices == 4
    cube = Polytope.box([0, 0, 0], [2, 1, 1])
    assert cube.volume() == 2


def test_hull_drops_interior_points():
    pts = [(0, 0), (4, 0), (0, 4), (4, 4), (1, 1), (2, 3), (2, 0)]
    p = convex_hull(pts)
    assert p.nvertices == 4
    assert p.volume() == 16


def test_exact_hull_matches_qhull_in_3d():
    rng = np.random.default_rng(3)
    pts = [tuple(int(c) for c in rng.integers(-5, 6, 3)) for _ in range(25)]
    exact = convex_hull(pts)
    approx = hull_float(np.array(pts, dtype=float))
    assert float(exact.volume()) == pytest.approx(approx.volume, rel=1e-12)


def test_lower_dimensional_hull():
    seg = convex_hull([(0, 0), (1, 1), (2, 2)])
    assert not seg.is_full_dimensional
    assert seg.nvertices == 2


def test_empty_hull_rejected():
    with pytest.raises(EmptyInputError):
        convex_hull([])


def test_minkowski_sum_of_squares():
    a = Polytope.box([0, 0], [1, 1])
    b = Polytope.box([0, 0], [2, 3])
    assert minkowski_sum(a, b).volume() == 12


def test_minkowski_dimension_mismatch():
    with pytest.raises(DimensionError):
        minkowski_sum(Polytope.box([0, 0], [1, 1]), Polytope.box([0, 0, 0], [1, 1, 1]))


def test_halfspace_round_trip():
    p = convex_hull([(0, 0), (3, 0), (1, 2)])
    q = halfspace_intersection(p.halfspaces())
    assert set(map(tuple, q.vertices)) == set(map(tuple, p.vertices))


def test_intersection_and_clip():
    a = Polytope.box([0, 0], [2, 2])
    b = Polytope.box([1, 1], [3, 3])
    assert intersect(a, b).volume() == 1
    assert clip(a, (1, 0), 1).volume() == 2
    with pytest.raises(EmptyIntersectionError):
        intersect(a, Polytope.box([5, 5], [6, 6]))


def test_affine_image_scales_volume_by_determinant():
    p = convex_hull([(0, 0), (3, 0), (1, 2)])
    img = affine_image(p, [[2, 1], [0, 3]], [1, -1])
    assert img.volume() == 6 * p.volume()


def test_qhull_volume_refuses_flat_input():
    pts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0.0]])
    with pytest.raises(DegenerateError):
        qhull_volume(pts)


def test_intrinsic_volumes_of_cube():
    cube = Polytope.box([0, 0, 0], [1, 1, 1])
    got = [intrinsic_volume(cube, j) for j in range(4)]
    assert got[0] == 1 and got[3] == 1
    assert float(got[1]) == pytest.approx(3, abs=1e-12)
    assert float(got[2]) == pytest.approx(3, abs=1e-12)


def test_square_first_intrinsic_volume_is_half_perimeter():
    assert intrinsic_volume(Polytope.box([0, 0], [1, 1]), 1) == 2


def test_gm_rule_weights_sum_to_one():
    for dim in (1, 2, 3):
        _, w = grundmann_moeller(dim, 5)
        assert sum(w) == 1


@pytest.mark.parametrize("exps", [(0, 0), (2, 1), (3, 2), (1, 4)])
def test_gm_rule_is_exact_on_monomials(exps):
    verts = [(F(0), F(0)), (F(2), F(1)), (F(1), F(3))]
    poly = Polynomial(2, {exps: 1})
    area = abs(sc.det([sc.sub(verts[1], verts[0]), sc.sub(verts[2], verts[0])])) / 2
    quad = integrate_on_simplex(lambda x: poly(x), verts, sum(exps), area, exact=True)
    assert quad == poly.integrate_simplex(verts)


def test_tensor_interpolation_recovers_coefficients():
    coeffs = {(0, 0): F(1), (2, 1): F(-3, 2), (1, 2): F(5)}
    poly = Polynomial(2, coeffs)
    values = {idx: poly(idx) for idx in itertools.product(range(4), repeat=2)}
    got = tensor_interpolate(values, 2, 3)
    for idx, c in got.items():
        assert c == coeffs.get(idx, 0)


@settings(max_examples=40, deadline=None)
@given(point_sets)
def test_volume_is_translation_invariant(points):
    p = _full(points)
    if p is None:
        return
    shifted = convex_hull([(x + 3, y - 2) for x, y in points])
    assert shifted.volume() == p.volume()


@settings(max_examples=40, deadline=None)
@given(point_sets)
def test_hull_is_order_independent(points):
    p = convex_hull(points)
    q = convex_hull(list(reversed(points)))
    assert set(map(tuple, p.vertices)) == set(map(tuple, q.vertices))


@settings(max_examples=30, deadline=None)
@given(point_sets, point_sets)
def test_planar_minkowski_matches_point_sum_hull(a, b):
    p, q = _full(a), _full(b)
    if p is None or q is None:
        return
    direct = minkowski_sum(p, q)
    pointwise = hull_exact([tuple(sc.add(u, v)) for u in p.vertices for v in q.vertices])
    assert direct.volume() == pointwise.volume
    # mixed-volume identity: vol(P+Q) - vol P - vol Q = 2 V(P, Q) >= 0
    assert direct.volume() - p.volume() - q.volume() >= 0


@settings(max_examples=30, deadline=None)
@given(point_sets)
def test_contains_all_generating_points(points):
    p = convex_hull(points)
    assert all(p.contains(pt) for pt in points)
