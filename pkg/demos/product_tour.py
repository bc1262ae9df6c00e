"""Evaluate a few valuations in the plane, multiply them, and watch the unit law and the grading."""
from fractions import Fraction

from convexval import suites
from convexval.polytope import Polytope, convex_hull
from convexval.product import product_eval, structure_constants
from convexval.valuation import GeneratorValuation, eval_valuation, euler_generator

square = Polytope.box([0, 0], [1, 1])
tri = convex_hull([(-1, -1), (2, 0), (0, 1)])
quad = convex_hull([(-1, 0), (0, -1), (1, 0), (0, 2)])

chi = euler_generator(2)
mixed_t = GeneratorValuation.single(2, [tri])
mixed_q = GeneratorValuation.single(2, [quad])
vol = GeneratorValuation.volume(2)

print("chi(square)           =", eval_valuation(chi, square))
print("2 V(square, tri)      =", eval_valuation(mixed_t, square))
print("vol(square + quad/2)  =", eval_valuation(vol, square) + eval_valuation(mixed_q, square) / 2
      + Fraction(1, 4) * quad.volume())

for name, phi in (("mixed_t", mixed_t), ("mixed_q + vol", mixed_q + vol)):
    plain = float(eval_valuation(phi, tri))
    unit = float(product_eval(chi, phi, tri).value)
    print(f"chi * {name} on tri: {unit:.12f}   ({name} alone: {plain:.12f})")

print("mixed_t * mixed_q on square =", product_eval(mixed_t, mixed_q, square).value)
print("vol * mixed_q (degree overflow) =", product_eval(vol, mixed_q, square).value)

table = structure_constants(2, suites.algebra_bodies()[:4])
print("structure constants:", {k: round(v, 10) for k, v in table.constants.items()})
