"""Named invariant suites used by ``convexval check`` and the acceptance tests.

Every suite returns a :class:`SuiteResult`; ``passed`` is decided against
the suite's own tolerances, which may be tightened or loosened with the
``tolerance`` override where a suite has a single float tolerance.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import scalar as sc
from .bodies import ball, circle_directions, ellipsoid, inscribed_polytope, ball_surrogate
from .density import Density
from .errors import ConvexityError, EmptyIntersectionError
from .polytope import Polytope, clip, convex_hull
from .valuation import GeneratorValuation, eval_valuation, euler_generator, intrinsic_generator


@dataclass
class SuiteResult:
    name: str
    passed: bool
    metrics: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        shown = ", ".join(f"{k}={_fmt(v)}" for k, v in self.metrics.items())
        return f"[{status}] {self.name} ({self.seconds:.1f}s) {shown}"

    def to_dict(self):
        return {"name": self.name, "passed": self.passed,
                "metrics": {k: _jsonable(v) for k, v in self.metrics.items()},
                "seconds": self.seconds}


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.3g}"
    return str(v)


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def _timed(fn):
    def run(*args, **kw):
        t0 = time.perf_counter()
        res = fn(*args, **kw)
        res.seconds = time.perf_counter() - t0
        return res

    run.__name__ = fn.__name__
    run.__doc__ = fn.__doc__
    return run


# -- random inputs ------------------------------------------------------------

def random_polygon(rng, points=8, scale=6, denominator=2):
    """Rational convex polygon: hull of random lattice points (retries until 2-dimensional)."""
    while True:
        pts = [tuple(Fraction(int(c), denominator) for c in rng.integers(-scale, scale + 1, 2))
               for _ in range(points)]
        p = convex_hull(pts)
        if p.is_full_dimensional and p.nvertices >= 3:
            return p


def random_polytope3(rng, points=10, scale=5):
    while True:
        pts = [tuple(Fraction(int(c)) for c in rng.integers(-scale, scale + 1, 3))
               for _ in range(points)]
        p = convex_hull(pts)
        if p.is_full_dimensional:
            return p


def random_rational_polytope(rng, dim, points, scale=4, denominator=2):
    pts = [tuple(Fraction(int(c), denominator) for c in rng.integers(-scale, scale + 1, dim))
           for _ in range(points)]
    return convex_hull(pts)


def split_pair(p, rng):
    """Two convex pieces of ``p`` cut by a random line with random overlap (union is ``p``)."""
    verts = p.vertices
    while True:
        a = tuple(Fraction(int(c)) for c in rng.integers(-3, 4, p.dim))
        if any(a):
            break
    vals = sorted(sc.dot(a, v) for v in verts)
    lo, hi = vals[0], vals[-1]
    cut = lo + (hi - lo) * Fraction(int(rng.integers(2, 7)), 8)
    width = (hi - lo) * Fraction(int(rng.integers(0, 3)), 8)
    left = clip(p, a, cut + width)
    right = clip(p, tuple(-c for c in a), -(cut - width))
    return left, right


# -- criterion suites -----------------------------------------------------------

@_timed
def steiner_suite(seed=0, polygons=20, polytopes=5, m=64):
    """Exact tube formula against hull volumes of ``K + l D_m``."""
    from .tube import steiner_residual, tube_polynomial

    rng = np.random.default_rng(seed)
    worst = Fraction(0)
    cases = 0
    d2 = ball_surrogate(2, m)
    d3 = ball_surrogate(3, m)
    bodies = [(random_polygon(rng), d2) for _ in range(polygons)]
    bodies += [(random_polytope3(rng), d3) for _ in range(polytopes)]
    for p, d in bodies:
        coeffs = tube_polynomial(p, d)
        for lam in (Fraction(1, 4), Fraction(1, 2), Fraction(1)):
            worst = max(worst, abs(steiner_residual(p, d, lam, coeffs)))
            cases += 1
    return SuiteResult("steiner", worst == 0, {"cases": cases, "max_residual": worst})


@_timed
def gauss_bonnet_suite(seed=0, polygons=50, tolerance=1e-10):
    """Gauss curvature form integrates to 2π; exterior angles and turning number are exact."""
    from .normal_cycle import exterior_angles, gauss_form, integrate_form, normal_cycle, turning_number

    rng = np.random.default_rng(seed)
    worst = 0.0
    angle_worst = 0.0
    turns_ok = True
    for _ in range(polygons):
        p = random_polygon(rng)
        val = integrate_form(normal_cycle(p.to_float()), gauss_form(2))
        worst = max(worst, abs(val - 2 * math.pi))
        angle_worst = max(angle_worst, abs(sum(exterior_angles(p.to_float())) - 2 * math.pi))
        turns_ok &= turning_number(p) == 1
    passed = worst <= tolerance and angle_worst <= tolerance and turns_ok
    return SuiteResult("gaussbonnet", passed, {"polygons": polygons, "max_error": worst,
                                               "angle_sum_error": angle_worst,
                                               "turning_numbers_exact": turns_ok})


@_timed
def additivity_suite(seed=0, pairs=20, forms=50, tolerance=1e-10):
    """``N(A) + N(B) = N(A∪B) + N(A∩B)`` tested against random forms."""
    from .normal_cycle import form_bank, union_additivity_check

    rng = np.random.default_rng(seed)
    banks = {n: form_bank(n, forms, seed) for n in (2, 3)}
    worst = 0.0
    for i in range(pairs):
        p = random_polygon(rng) if i % 5 else random_polytope3(rng, points=8, scale=3)
        a, b = split_pair(p, rng)
        a, b = a.to_float(), b.to_float()
        worst = max(worst, union_additivity_check(a, b, bank=banks[p.dim]))
    return SuiteResult("additivity", worst <= tolerance, {"pairs": pairs, "forms": forms,
                                                          "max_residual": worst})


def algebra_valuations():
    """Six exact-generator valuations on the plane used by the algebra suites."""
    tri = convex_hull([(-1, -1), (2, 0), (0, 1)])
    quad = convex_hull([(-1, 0), (0, -1), (1, 0), (0, 2)])
    lin = Density.from_terms(2, [((0, 0), 2), ((1, 0), Fraction(1, 2))])
    return [
        ("volume", GeneratorValuation.volume(2)),
        ("V1", intrinsic_generator(2, 1)),
        ("mixed_T", GeneratorValuation.single(2, [tri])),
        ("mixed_TQ", GeneratorValuation.single(2, [tri, quad])),
        ("sum", GeneratorValuation.single(2, [quad]) + Fraction(1, 2) * GeneratorValuation.volume(2)),
        ("weighted_Q", GeneratorValuation.single(2, [quad], density=lin)),
    ]


def algebra_bodies():
    return [
        Polytope.box([0, 0], [1, 1]),
        convex_hull([(0, 0), (3, 0), (1, 2)]),
        convex_hull([(-1, -1), (2, -1), (3, 1), (0, 2), (-2, 1)]),
        convex_hull([(0, 0), (1, 0), (2, 1), (1, 3)]),
        convex_hull([(Fraction(1, 2), 0), (4, 1), (0, 1)]),
        Polytope.box([-2, -1], [1, 0]),
    ]


@_timed
def algebra_suite(seed=0, tolerance=1e-6):
    """Unit law, commutativity and associativity of the product."""
    from .product import nested_product_eval, product_eval, triple_product_eval

    vals = algebra_valuations()
    bodies = algebra_bodies()
    chi = euler_generator(2)
    unit = 0.0
    for _, v in vals:
        for k in bodies:
            exact = float(eval_valuation(v, k))
            got = float(product_eval(chi, v, k).value)
            unit = max(unit, abs(got - exact) / max(abs(exact), 1.0))
    comm = 0.0
    for (_, a), (_, b) in [(vals[1], vals[2]), (vals[2], vals[3]), (vals[1], vals[4]),
                           (vals[5], vals[2])]:
        for k in bodies[:3]:
            ab = float(product_eval(a, b, k).value)
            ba = float(product_eval(b, a, k).value)
            comm = max(comm, abs(ab - ba) / max(abs(ab), 1e-300) if ab != ba else 0.0)
    # n = 1, exact
    seg = convex_hull([(-1,), (1,)])
    seg2 = convex_hull([(0,), (2,)])
    a1 = GeneratorValuation.single(1, [seg]) + GeneratorValuation.volume(1)
    b1 = GeneratorValuation.single(1, [seg2]) + 2 * GeneratorValuation.volume(1)
    c1 = euler_generator(1) + GeneratorValuation.single(1, [seg])
    k1 = convex_hull([(0,), (3,)])
    t1 = triple_product_eval(a1, b1, c1, k1).value
    n1 = nested_product_eval(a1, b1, c1, k1)
    exact_n1 = t1 == n1
    # n = 2, three triples; a triangle stands in for the ball in chi to keep the 6D hulls well conditioned
    tri = convex_hull([(-1, -1), (2, 0), (0, 1)])
    tri2 = convex_hull([(0, -1), (1, 1), (-1, 1)])
    quad = convex_hull([(-1, 0), (0, -1), (1, 0), (0, 2)])
    s = GeneratorValuation.single
    vol = GeneratorValuation.volume(2)
    chi_t = euler_generator(2, body=tri2)
    triples = [
        (chi_t + s(2, [tri]), s(2, [tri2]) + vol, s(2, [quad]), quad),
        (s(2, [tri, tri2]), s(2, [quad]), s(2, [tri]) + vol, convex_hull([(0, 0), (3, 0), (1, 2)])),
        (chi_t, s(2, [quad]) + s(2, [tri, quad]), chi_t + s(2, [tri2]), tri),
    ]
    assoc = 0.0
    for a, b, c, k in triples:
        t = float(triple_product_eval(a, b, c, k).value)
        nv = float(nested_product_eval(a, b, c, k))
        assoc = max(assoc, abs(t - nv) / max(abs(t), 1e-300) if t != nv else 0.0)
    passed = unit <= tolerance and comm <= 1e-9 and exact_n1 and assoc <= 1e-5
    return SuiteResult("algebra", passed, {"unit_residual": unit, "commutativity": comm,
                                           "associativity_n1_exact": exact_n1,
                                           "associativity_n2": assoc})


@_timed
def graded_suite(seed=0, tolerance=1e-6):
    """Structure constants of the intrinsic-volume basis and vanishing overflow products."""
    from .product import structure_constants

    bodies = algebra_bodies()[:5]
    table = structure_constants(2, bodies)
    spread = max(table.spread.values())
    overflow = max(table.overflow.values())
    return SuiteResult("graded", spread <= tolerance and overflow <= tolerance,
                       {"bodies": len(bodies), "c11": table.constants[(1, 1)],
                        "max_spread": spread, "max_overflow": overflow})


@_timed
def reach_suite(seed=0, cases=100, slack=1e-3):
    """Sampled reach of ``g(K)`` against the reach lower bound for quadratic perturbations."""
    from .charts import Chart
    from .reach import domain_grid, image_reach, reach_bound

    rng = np.random.default_rng(seed)
    violations = 0
    worst = math.inf
    delta = 0.5
    for i in range(cases):
        k = random_polygon(rng, points=6, scale=2, denominator=2)
        g = Chart.quadratic(rng.normal(size=(2, 2, 2)) * 0.05)
        bound = reach_bound(g, k, delta, grid=domain_grid(k, delta, 30))
        measured = image_reach(g, k, per_edge=200)
        ratio = measured / bound
        worst = min(worst, ratio)
        if measured < (1 - slack) * bound:
            violations += 1
    return SuiteResult("reach", violations == 0, {"cases": cases, "violations": violations,
                                                  "min_ratio": worst})


@_timed
def injectivity_suite(seed=0, samples=100_000):
    """Tube map collisions below and above the injectivity threshold."""
    from .tube import tube_injectivity_check

    rng = np.random.default_rng(seed)
    cases = []
    for i in range(6):
        body = ball(1.0) if i % 2 else ellipsoid(1.5, 0.75)
        cases.append((random_polygon(rng).to_float(), body, 0.5 + 0.25 * i))
    pts_sets = [np.array([[0.0, 0.0], [2.0, 0.0]]), np.array([[0.0, 0.0], [1.0, 1.0], [3.0, 0.0]]),
                rng.uniform(-3, 3, size=(5, 2)), np.array([[0.0, 0.0], [0.0, 1.5]])]
    for pts in pts_sets:
        cases.append((pts, ellipsoid(1.5, 1.0), None))
    bad = 0
    details = []
    for x, body, eps in cases:
        if eps is None:
            from .reach import reach_estimate_polytope_or_points
            from .bodies import curvature_range

            eps = reach_estimate_polytope_or_points(x) * curvature_range([body], [1.0]).kmin
        v = tube_injectivity_check(x, body, eps, samples=samples, seed=seed)
        details.append(v.collisions)
        bad += v.collisions > 0
    reach = 1.0
    sharp = tube_injectivity_check(pts_sets[0], ellipsoid(1.5, 1.0), 0.8 * reach,
                                   samples=samples, seed=seed)
    passed = bad == 0 and sharp.collisions > 0
    return SuiteResult("injectivity", passed, {"cases": len(cases), "cases_with_collisions": bad,
                                               "sharpness_collisions": sharp.collisions,
                                               "sharpness_verdict": sharp.verdict})


@_timed
def approximation_suite(seed=0, sides=(8, 16, 32, 64, 128), min_order=1.9):
    """Convergence order of intrinsic volumes of inscribed polygons to those of the disk."""
    from .intrinsic import intrinsic_volume

    exact = {1: math.pi, 2: math.pi}
    orders = {}
    errors = {}
    for j in (1, 2):
        errs = []
        for m in sides:
            p = inscribed_polytope(ball(1.0), circle_directions(m))
            errs.append(abs(float(intrinsic_volume(p, j)) - exact[j]))
        slope = np.polyfit(np.log(sides), np.log(errs), 1)[0]
        orders[j] = -float(slope)
        errors[j] = errs
    passed = all(o >= min_order for o in orders.values())
    return SuiteResult("approx", passed, {"order_V1": orders[1], "order_V2": orders[2],
                                          "error_V1_m128": errors[1][-1],
                                          "error_V2_m128": errors[2][-1]})


def tube_valuations():
    lin = Density.from_terms(2, [((0, 0), 1), ((1, 0), Fraction(1, 4))])
    quad = Density.from_terms(2, [((2, 0), 1), ((0, 2), 1)])
    e = ellipsoid(1.5, 0.75)
    b = ball(1.0)
    s = GeneratorValuation.single
    return [s(2, [b]), s(2, [e]), s(2, [b], density=quad), s(2, [b, e]), s(2, [e, e], density=lin)]


@_timed
def two_path_suite(seed=0, tolerance=1e-5):
    """Generator evaluation against tube pull-back evaluation on smooth-body valuations."""
    from .tube import tube_pullback_eval

    bodies = algebra_bodies()[:5]
    worst = 0.0
    for v in tube_valuations():
        for k in bodies:
            a = float(eval_valuation(v, k))
            b = float(tube_pullback_eval(v, k).value)
            worst = max(worst, abs(a - b) / max(abs(a), 1e-300))
    return SuiteResult("tube", worst <= tolerance, {"valuations": 5, "bodies": len(bodies),
                                                    "max_relative": worst})


@_timed
def plcycle_suite(seed=0, pairs1=20, pairs2=10, forms=50):
    """Exact max/min identity of differential cycles and their closedness."""
    from .plcycle import (convex_minimum, differential_cycle, is_closed,
                          maxmin_additivity_check, random_convex_min_pair)

    rng = np.random.default_rng(seed)
    worst = Fraction(0)
    closed = True
    for dim, count in ((1, pairs1), (2, pairs2)):
        for _ in range(count):
            f, g = random_convex_min_pair(dim, rng)
            worst = max(worst, maxmin_additivity_check(f, g, forms=forms, seed=seed))
            for h in (f, g, f.maximum(g), convex_minimum(f, g)):
                closed &= is_closed(differential_cycle(h))
    return SuiteResult("plcycles", worst == 0 and closed,
                       {"pairs": pairs1 + pairs2, "max_residual": worst, "all_closed": closed})


@_timed
def chart_suite(seed=0, affine_tolerance=1e-9, nonlinear_tolerance=1e-4,
                ladder=(0.1, 0.05, 0.025, 0.0125)):
    """Chart independence of the product for affine and quadratic chart changes."""
    from .charts import Chart, biconvex_bodies, chart_independence_check, place

    rng = np.random.default_rng(seed)
    tri = convex_hull([(-1, -1), (2, 0), (0, 1)])
    quad = convex_hull([(-1, 0), (0, -1), (1, 0), (0, 2)])
    s = GeneratorValuation.single
    phi, psi = s(2, [tri]), s(2, [quad])
    pairs = [(euler_generator(2), s(2, [tri]) + GeneratorValuation.volume(2)), (phi, psi),
             (intrinsic_generator(2, 1), phi)]
    affine_worst = 0.0
    f = Chart.identity(2)
    for i in range(3):
        m = [[1, Fraction(int(rng.integers(-3, 4)), 10)],
             [Fraction(int(rng.integers(-3, 4)), 10), Fraction(int(rng.integers(8, 15)), 10)]]
        g = Chart.affine(m, [Fraction(int(rng.integers(-5, 6)), 10), 0])
        k = algebra_bodies()[i + 1]
        for a, b in pairs:
            affine_worst = max(affine_worst, chart_independence_check(a, b, f, g, k)[0])
    ladders = []
    for i in range(2):
        q = Chart.quadratic(rng.normal(size=(2, 2, 2)) * 0.15)
        center = tuple(float(c) for c in rng.uniform(-0.5, 0.5, 2))
        biconvex_bodies(f, q, ball(1.0), [ladder[0]], centers=[center])
        ladders.append([chart_independence_check(phi, psi, f, q, place(ball(1.0), eps, center))[0]
                        for eps in ladder])
    monotone = all(all(b < a for a, b in zip(r, r[1:])) for r in ladders)
    final = max(r[-1] for r in ladders)
    passed = affine_worst <= affine_tolerance and monotone and final <= nonlinear_tolerance
    return SuiteResult("charts", passed, {"affine_max": affine_worst, "nonlinear_final": final,
                                          "monotone": monotone,
                                          "ladders": [[float(x) for x in r] for r in ladders]})


@_timed
def slice_suite(seed=0, n1=100, n2=20):
    """Slice identity on random rational instances."""
    from .charts import slice_identity_check

    rng = np.random.default_rng(seed)
    worst = 0
    nonempty = 0
    for n, count in ((1, n1), (2, n2)):
        for _ in range(count):
            t = random_rational_polytope(rng, 2 * n, 4 + 2 * n)
            a = random_rational_polytope(rng, n, n + 2, scale=2)
            b = random_rational_polytope(rng, n, n + 2, scale=2)
            x0 = tuple(Fraction(int(c), 2) for c in rng.integers(-4, 5, n))
            r = slice_identity_check(t, a, b, x0)
            worst = max(worst, r)
    return SuiteResult("slice", worst == 0, {"instances": n1 + n2, "max_residual": worst})


SUITES = {
    "steiner": [steiner_suite],
    "gaussbonnet": [gauss_bonnet_suite],
    "additivity": [additivity_suite],
    "algebra": [algebra_suite, graded_suite],
    "reach": [reach_suite],
    "tube": [injectivity_suite, two_path_suite],
    "approx": [approximation_suite],
    "plcycles": [plcycle_suite],
    "charts": [chart_suite, slice_suite],
}


def run_suite(name, seed=0):
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(sorted(SUITES))}")
    return [fn(seed=seed) for fn in SUITES[name]]
