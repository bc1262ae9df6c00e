import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from convexval.charts import Chart
from convexval.errors import ProvenanceError
from convexval.normal_cycle import (check_alternating, exterior_angles, form_bank, gamma_conify,
                                    gauss_form, integrate_form, integrate_forms, lift_pushforward,
                                    lipschitz_killing_form, normal_cycle, preset_form, turning_number,
                                    union_additivity_check)
from convexval.polytope import Polytope
from convexval.suites import random_polygon, random_polytope3, split_pair

SQ = Polytope.box([0, 0], [1, 1])
seeds = st.integers(0, 10_000)


def test_square_lipschitz_killing_values():
    nc = normal_cycle(SQ.to_float())
    assert integrate_form(nc, preset_form("gauss", 2)) == pytest.approx(2 * math.pi, abs=1e-12)
    assert integrate_form(nc, lipschitz_killing_form(2, 0)) == pytest.approx(1, abs=1e-12)
    assert integrate_form(nc, lipschitz_killing_form(2, 1)) == pytest.approx(2, abs=1e-12)


def test_box_intrinsic_volumes_from_the_cycle():
    nc = normal_cycle(Polytope.box([0, 0, 0], [1, 2, 3]).to_float())
    got = [integrate_form(nc, lipschitz_killing_form(3, j)) for j in range(3)]
    assert got == pytest.approx([1, 6, 11], abs=1e-10)


def test_exterior_angles_and_turning_number():
    assert exterior_angles(SQ.to_float()) == pytest.approx([math.pi / 2] * 4)
    assert turning_number(SQ) == 1


def test_random_forms_are_alternating():
    for form in form_bank(2, 5, seed=1):
        assert check_alternating(form) < 1e-12


@pytest.mark.parametrize("dim", [2, 3])
def test_batched_forms_equal_single_form_integrals(dim):
    rng = np.random.default_rng(4)
    p = random_polygon(rng) if dim == 2 else random_polytope3(rng)
    nc = normal_cycle(p.to_float())
    bank = form_bank(dim, 12, seed=2)
    batched = integrate_forms(nc, bank)
    single = [integrate_form(nc, f) for f in bank]
    assert np.allclose(batched, single, rtol=1e-12, atol=1e-12)


def test_conification_needs_matching_body():
    body = SQ.to_float()
    nc = normal_cycle(body)
    assert any(s.base for s in gamma_conify(nc, body).strata)
    with pytest.raises(ProvenanceError):
        gamma_conify(nc, SQ.to_float())


def test_affine_lift_is_the_cycle_of_the_image():
    pushed = lift_pushforward(normal_cycle(SQ.to_float()), Chart.affine([[2, 0], [0, 1]], [0, 0]))
    assert integrate_form(pushed, gauss_form(2)) == pytest.approx(2 * math.pi, abs=1e-8)
    assert integrate_form(pushed, lipschitz_killing_form(2, 1)) == pytest.approx(3, abs=1e-8)


def test_nonlinear_lift_keeps_gauss_bonnet():
    chart = Chart.quadratic([[[0.05, 0], [0, 0]], [[0, 0], [0, 0.05]]])
    pushed = lift_pushforward(normal_cycle(SQ.to_float()), chart)
    assert integrate_form(pushed, gauss_form(2)) == pytest.approx(2 * math.pi, abs=1e-8)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_gauss_bonnet_on_random_polygons(seed):
    p = random_polygon(np.random.default_rng(seed))
    assert integrate_form(normal_cycle(p.to_float()), gauss_form(2)) == pytest.approx(2 * math.pi, abs=1e-10)
    assert sum(exterior_angles(p.to_float())) == pytest.approx(2 * math.pi, abs=1e-12)


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_cycles_are_additive_on_convex_unions(seed):
    rng = np.random.default_rng(seed)
    a, b = split_pair(random_polygon(rng), rng)
    assert union_additivity_check(a.to_float(), b.to_float(), forms=10, seed=seed) <= 1e-10


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_first_lk_form_is_half_perimeter(seed):
    p = random_polygon(np.random.default_rng(seed)).to_float()
    v = p.vertex_array()
    half = 0.5 * sum(np.linalg.norm(v[i] - v[i - 1]) for i in range(len(v)))
    assert integrate_form(normal_cycle(p), lipschitz_killing_form(2, 1)) == pytest.approx(half, rel=1e-12)
