"""Densities on R^n and their integrals over polytopes."""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from . import scalar as sc
from .errors import DegenerateError, ToleranceError
from .poly import Polynomial
from .quadrature import grundmann_moeller, integrate_on_simplex, rule_degree

CONSTANT = "constant"
POLYNOMIAL = "polynomial"
GENERAL = "general"
DEFAULT_ORDER = 6


class Density:
    """A density ``x -> value`` with a classification tag.

    Constant and polynomial densities keep their coefficients, which lets
    every downstream computation stay exact. General densities are opaque
    callables and force numeric routes.
    """

    def __init__(self, dim, kind, *, poly=None, func=None, support_box=None, name=None):
        self.dim = dim
        self.kind = kind
        self.poly = poly
        self.func = func
        self.support_box = support_box
        self.name = name

    @classmethod
    def lebesgue(cls, dim):
        return cls.constant(dim, 1)

    @classmethod
    def constant(cls, dim, value):
        value = sc.to_rational(value) if not isinstance(value, float) else value
        return cls(dim, CONSTANT, poly=Polynomial.constant(dim, value))

    @classmethod
    def polynomial(cls, poly):
        if poly.degree() == 0:
            return cls(poly.nvars, CONSTANT, poly=poly)
        return cls(poly.nvars, POLYNOMIAL, poly=poly)

    @classmethod
    def from_terms(cls, dim, terms):
        """``terms``: mapping or list of ``(exponents, coefficient)``."""
        items = terms.items() if isinstance(terms, dict) else terms
        t = {}
        for e, c in items:
            e = tuple(e)
            t[e] = t.get(e, 0) + sc.to_rational(c)
        return cls.polynomial(Polynomial(dim, t))

    @classmethod
    def general(cls, dim, func, support_box=None, name=None):
        return cls(dim, GENERAL, func=func, support_box=support_box, name=name)

    @property
    def is_polynomial(self):
        return self.kind in (CONSTANT, POLYNOMIAL)

    @property
    def is_constant(self):
        return self.kind == CONSTANT

    def constant_value(self):
        return self.poly.terms.get((0,) * self.dim, 0)

    def degree(self):
        return self.poly.degree() if self.is_polynomial else None

    def __call__(self, x):
        if self.is_polynomial:
            return self.poly(x)
        return self.func(x)

    def as_float(self):
        if not self.is_polynomial:
            return self
        return Density(self.dim, self.kind, poly=self.poly.to_float(), name=self.name)

    def tensor(self, other):
        """``(x, y) -> self(x) * other(y)`` on the product space."""
        n, m = self.dim, other.dim
        if self.is_polynomial and other.is_polynomial:
            t = {}
            for e1, c1 in self.poly.terms.items():
                for e2, c2 in other.poly.terms.items():
                    t[e1 + e2] = t.get(e1 + e2, 0) + c1 * c2
            return Density.polynomial(Polynomial(n + m, t))
        return Density.general(n + m, lambda z: self(z[:n]) * other(z[n:]))

    def pushforward_affine(self, matrix, offset):
        """Density of the image measure under ``x -> M x + b`` (M invertible)."""
        m = [[sc.to_rational(c) for c in row] for row in matrix]
        b = [sc.to_rational(c) for c in offset]
        detm = sc.det(m)
        if detm == 0:
            raise DegenerateError("affine push-forward needs an invertible matrix")
        inv = _inverse(m)
        shift = [-sum(r[j] * b[j] for j in range(len(b))) for r in inv]
        if self.is_polynomial:
            coeff = self.poly.terms
            is_float = any(isinstance(c, float) for c in coeff.values())
            p = self.poly.compose_affine(inv, shift) * (1 / abs(detm))
            if is_float:
                p = p.to_float()
            return Density.polynomial(p)
        fi = np.array(inv, dtype=float)
        fs = np.array(shift, dtype=float)
        scale = 1.0 / abs(float(detm))
        f = self.func
        return Density.general(self.dim, lambda y: f(tuple(fi @ np.asarray(y, float) + fs)) * scale)

    def to_dict(self):
        if self.is_polynomial:
            return {"dim": self.dim, "kind": self.kind,
                    "terms": [[list(e), sc.format_scalar(c)] for e, c in sorted(self.poly.terms.items())]}
        return {"dim": self.dim, "kind": GENERAL, "name": self.name}

    @classmethod
    def from_dict(cls, data):
        kind = data.get("kind", CONSTANT)
        dim = data["dim"]
        if kind == CONSTANT and "value" in data:
            return cls.constant(dim, data["value"])
        if kind in (CONSTANT, POLYNOMIAL):
            return cls.from_terms(dim, [(e, c) for e, c in data["terms"]])
        from .bodies import named_density

        return named_density(data["name"], dim)

    def __repr__(self):
        if self.is_polynomial:
            return f"Density({self.kind}, {self.poly!r})"
        return f"Density(general, {self.name or self.func!r})"


def _inverse(m):
    n = len(m)
    cols = []
    for j in range(n):
        e = [Fraction(int(i == j)) for i in range(n)]
        cols.append(sc.solve(m, e))
    return [[cols[j][i] for j in range(n)] for i in range(n)]


def integrate_density(polytope, density, order=DEFAULT_ORDER, exact_required=False,
                      return_order=False):
    """Integral of ``density`` over a full-dimensional polytope.

    Polynomial densities are integrated exactly whenever ``order`` covers
    their degree; in rational mode the result is then an exact Fraction.
    """
    if density.dim != polytope.dim:
        raise ValueError("density and polytope live in different dimensions")
    if not polytope.is_full_dimensional:
        raise DegenerateError("integration needs a full-dimensional polytope")
    if density.is_polynomial:
        deg = density.degree()
        if order < deg:
            if exact_required:
                raise ToleranceError(f"order {order} is below the density degree {deg}")
        else:
            order = max(order, deg)
    if density.is_constant:
        val = polytope.volume() * density.constant_value()
        return (val, rule_degree(order)) if return_order else val
    exact = polytope.mode == sc.RATIONAL and density.is_polynomial and not any(
        isinstance(c, float) for c in density.poly.terms.values())
    total = 0 if exact else 0.0
    fan_apex = polytope.centroid_of_vertices()
    if polytope.dim == 1:
        simplices = polytope.triangulate()
    else:
        simplices = [tuple(s) + (fan_apex,) for s in polytope._boundary]
    for simplex in simplices:
        vol = _simplex_volume(simplex, exact)
        if vol == 0:
            continue
        total += integrate_on_simplex(density, simplex, order, vol, exact=exact)
    return (total, rule_degree(order)) if return_order else total


def _simplex_volume(simplex, exact):
    from math import factorial

    v0 = simplex[0]
    rows = [sc.sub(v, v0) for v in simplex[1:]]
    d = len(rows)
    if exact:
        return abs(sc.det(rows)) / factorial(d)
    return abs(float(np.linalg.det(np.array(rows, dtype=float)))) / factorial(d)


def lebesgue_moment_table(dim, degree):
    """Grundmann-Moeller nodes and weights exposed for inspection."""
    return grundmann_moeller(dim, degree)
