"""Normal cycles of polygons, the tube polynomial, and where the tube map stops being injective."""
import math

import numpy as np

from convexval.bodies import ball, ball_surrogate
from convexval.normal_cycle import gauss_form, integrate_form, lipschitz_killing_form, normal_cycle
from convexval.polytope import convex_hull
from convexval.tube import steiner_residual, tube_injectivity_check, tube_polynomial

pentagon = convex_hull([(0, 0), (4, 0), (5, 2), (2, 4), (-1, 2)])
nc = normal_cycle(pentagon.to_float())
print("Gauss form / 2pi:", integrate_form(nc, gauss_form(2)) / (2 * math.pi))
for j in range(2):
    print(f"V_{j} from the cycle:", integrate_form(nc, lipschitz_killing_form(2, j)))

d = ball_surrogate(2, 64)
coeffs = tube_polynomial(pentagon, d)
print("tube polynomial coefficients (float):", [float(c) for c in coeffs])
print("exact residual at lambda = 1/2:", steiner_residual(pentagon, d, coeffs=coeffs, lam=0.5))

pts = np.array([[0.0, 0.0], [2.0, 0.0]])
for eps in (0.5, 0.9, 1.1, 1.5):
    v = tube_injectivity_check(pts, ball(1.0), eps, samples=20_000)
    print(f"eps={eps}: {v.verdict} ({v.collisions} collisions)")
