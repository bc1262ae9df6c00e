from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from convexval.bodies import ball
from convexval.density import Density
from convexval.errors import DegenerateError
from convexval.polytope import Polytope, convex_hull, minkowski_sum
from convexval.suites import random_polygon, split_pair
from convexval.valuation import (GeneratorValuation, eval_on_union, eval_valuation, euler_generator,
                                 evaluate, intrinsic_generator, minkowski_polynomial)

single = GeneratorValuation.single
SQ = Polytope.box([0, 0], [1, 1])
CENTERED = Polytope.box([-1, -1], [1, 1])
LINEAR = Density.from_terms(2, [((1, 0), 1)])
seeds = st.integers(0, 10_000)


def test_volume_generator():
    assert eval_valuation(GeneratorValuation.volume(2), Polytope.box([0, 0], [2, 3])) == 6


def test_euler_is_one_in_each_dimension():
    assert evaluate(euler_generator(1), convex_hull([(2,), (5,)])).value == 1
    assert evaluate(euler_generator(3), Polytope.box([0, 0, 0], [1, 2, 3])).value == 1


def test_mixed_term_against_smooth_ball_is_perimeter():
    res = evaluate(single(2, [ball(1.0)]), SQ)
    assert res.method == "numeric"
    assert res.value == pytest.approx(4.0, rel=1e-12)


def test_minkowski_polynomial_of_square_with_itself():
    mp = minkowski_polynomial(Density.lebesgue(2), SQ, [SQ])
    assert mp.coeffs == {(0,): 1, (1,): 2, (2,): 1}


def test_weighted_measure_and_mixed_term():
    assert eval_valuation(single(2, [], density=LINEAR), SQ) == F(1, 2)
    assert eval_valuation(single(2, [CENTERED], density=LINEAR), SQ) == 2
    # non-constant density: the value moves with the body
    assert eval_valuation(single(2, [CENTERED], density=LINEAR), SQ.translate((1, 0))) == 6


def test_off_origin_body_rejected_for_nonconstant_density():
    with pytest.raises(DegenerateError):
        single(2, [SQ], density=LINEAR)


def test_homogeneity_metadata():
    assert single(2, [SQ]).homogeneity() == 1
    assert (single(2, [SQ]) + GeneratorValuation.volume(2)).homogeneity() is None
    assert single(2, [SQ]).is_translation_invariant()


def test_intrinsic_generator_close_to_half_perimeter():
    assert float(eval_valuation(intrinsic_generator(2, 1), SQ)) == pytest.approx(2.0, rel=1e-3)


def test_union_evaluation_uses_inclusion_exclusion():
    pieces = [SQ, Polytope.box([0, 0], [2, 1])]
    assert eval_on_union(GeneratorValuation.volume(2), pieces) == 2


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_euler_generator_is_exactly_one(seed):
    p = random_polygon(np.random.default_rng(seed))
    assert eval_valuation(euler_generator(2), p) == 1


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_self_mixed_term_is_twice_volume(seed):
    p = random_polygon(np.random.default_rng(seed))
    assert eval_valuation(single(2, [p]), p) == 2 * p.volume()


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_mixed_term_is_symmetric(seed):
    rng = np.random.default_rng(seed)
    a, b = random_polygon(rng), random_polygon(rng)
    assert eval_valuation(single(2, [a]), b) == eval_valuation(single(2, [b]), a)


@settings(max_examples=25, deadline=None)
@given(seeds, st.fractions(0, 3, max_denominator=6))
def test_volume_of_dilated_sum_matches_polynomial(seed, lam):
    rng = np.random.default_rng(seed)
    k, a = random_polygon(rng), random_polygon(rng)
    mp = minkowski_polynomial(Density.lebesgue(2), k, [a])
    direct = minkowski_sum(k, a.scale(lam)).volume()
    assert sum(c * lam ** e[0] for e, c in mp.coeffs.items()) == direct


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_generators_are_valuations(seed):
    rng = np.random.default_rng(seed)
    p = random_polygon(rng)
    a, b = split_pair(p, rng)
    cap = convex_hull([v for v in a.vertices if b.contains(v)] + [v for v in b.vertices if a.contains(v)])
    quad = convex_hull([(-1, 0), (0, -1), (1, 0), (0, 2)])
    for phi in (single(2, [quad]), single(2, [CENTERED], density=LINEAR), euler_generator(2)):
        assert eval_valuation(phi, a) + eval_valuation(phi, b) == \
            eval_valuation(phi, p) + eval_valuation(phi, cap)
