"""Smooth valuations on convex bodies: exact polytopes, normal cycles, products and charts."""
from .errors import ConvexValError
from .polytope import Polytope, convex_hull, minkowski_sum
from .bodies import SupportBody, ball, ellipsoid
from .density import Density
from .valuation import (GeneratorValuation, EvalResult, eval_valuation, euler_generator,
                        intrinsic_generator)
from .product import product_eval, ProductValuation

__all__ = [
    "ConvexValError", "Polytope", "convex_hull", "minkowski_sum", "SupportBody", "ball", "ellipsoid",
    "Density", "GeneratorValuation", "EvalResult", "eval_valuation", "euler_generator",
    "intrinsic_generator", "product_eval", "ProductValuation",
]

__version__ = "0.1.0"
