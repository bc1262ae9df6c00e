"""Chart changes: exact for affine maps, second-order small for curved ones; plus the slice identity."""
from fractions import Fraction

import numpy as np

from convexval.bodies import ball
from convexval.charts import Chart, chart_independence_check, place, slice_identity_check
from convexval.polytope import Polytope, convex_hull
from convexval.valuation import GeneratorValuation

tri = convex_hull([(-1, -1), (2, 0), (0, 1)])
quad = convex_hull([(-1, 0), (0, -1), (1, 0), (0, 2)])
phi, psi = GeneratorValuation.single(2, [tri]), GeneratorValuation.single(2, [quad])
ident = Chart.identity(2)

shear = Chart.parse("affine:[[1,0.3],[0,1.2]],[0.5,0]")
print("affine residual:", chart_independence_check(phi, psi, ident, shear, Polytope.box([0, 0], [1, 1]))[0])

bend = Chart.quadratic(np.random.default_rng(0).normal(size=(2, 2, 2)) * 0.15)
for eps in (0.1, 0.05, 0.025, 0.0125):
    r = chart_independence_check(phi, psi, ident, bend, place(ball(1.0), eps, (0.2, -0.1)))[0]
    print(f"quadratic chart, disk radius {eps}: residual {r:.3e}")

t = Polytope.box([0, 0], [2, 2])
a = convex_hull([(0,), (1,)])
b = convex_hull([(Fraction(1, 2),), (3,)])
print("slice identity residual:", slice_identity_check(t, a, b, (Fraction(1, 2),)))
