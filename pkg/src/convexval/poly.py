"""Sparse multivariate polynomials with exact or float coefficients.

Used for polynomial densities, differential forms on PL cells and exact
integration over simplices.
"""
from __future__ import annotations

from fractions import Fraction
from math import factorial, prod


class Polynomial:
    """Polynomial in ``nvars`` variables stored as ``{exponent tuple: coeff}``."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars, terms=None):
        self.nvars = nvars
        self.terms = {}
        for e, c in (terms or {}).items():
            e = tuple(e)
            if len(e) != nvars:
                raise ValueError(f"exponent {e} does not match {nvars} variables")
            if c != 0:
                self.terms[e] = self.terms.get(e, 0) + c
        self.terms = {e: c for e, c in self.terms.items() if c != 0}

    @classmethod
    def constant(cls, nvars, c):
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def variable(cls, nvars, i, coeff=1):
        e = [0] * nvars
        e[i] = 1
        return cls(nvars, {tuple(e): coeff})

    @classmethod
    def affine(cls, coeffs, const=0):
        """``const + sum coeffs[i] * x_i``."""
        n = len(coeffs)
        out = cls.constant(n, const)
        for i, a in enumerate(coeffs):
            out = out + cls.variable(n, i, a)
        return out

    def degree(self):
        return max((sum(e) for e in self.terms), default=0)

    def is_zero(self):
        return not self.terms

    def _coerce(self, other):
        if isinstance(other, Polynomial):
            if other.nvars != self.nvars:
                raise ValueError("polynomials live in different variable counts")
            return other
        return Polynomial.constant(self.nvars, other)

    def __add__(self, other):
        other = self._coerce(other)
        t = dict(self.terms)
        for e, c in other.terms.items():
            t[e] = t.get(e, 0) + c
        return Polynomial(self.nvars, t)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            return Polynomial(self.nvars, {e: c * other for e, c in self.terms.items()})
        other = self._coerce(other)
        t = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                t[e] = t.get(e, 0) + c1 * c2
        return Polynomial(self.nvars, t)

    __rmul__ = __mul__

    def __pow__(self, k):
        out = Polynomial.constant(self.nvars, 1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __call__(self, x):
        total = 0
        for e, c in self.terms.items():
            total += c * prod(xi ** k for xi, k in zip(x, e) if k)
        return total

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(self.nvars, other)
        return self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self):
        return hash((self.nvars, frozenset(self.terms.items())))

    def __repr__(self):
        if not self.terms:
            return "Polynomial(0)"
        return "Polynomial(" + " + ".join(f"{c}*x^{e}" for e, c in sorted(self.terms.items())) + ")"

    def map_coeffs(self, f):
        return Polynomial(self.nvars, {e: f(c) for e, c in self.terms.items()})

    def compose_affine(self, matrix, offset):
        """Substitute ``x = matrix @ y + offset``; result is in ``len(matrix[0])`` variables."""
        m = len(matrix[0]) if matrix else 0
        subs = [Polynomial.affine(row, b) for row, b in zip(matrix, offset)]
        if len(subs) != self.nvars:
            raise ValueError("substitution size mismatch")
        if not subs:
            return Polynomial(m, {(0,) * m: self.terms.get((), 0)})
        out = Polynomial(m)
        cache = {}
        for e, c in self.terms.items():
            term = Polynomial.constant(m, c)
            for i, k in enumerate(e):
                if k:
                    key = (i, k)
                    if key not in cache:
                        cache[key] = subs[i] ** k
                    term = term * cache[key]
            out = out + term
        return out

    def integrate_standard_simplex(self):
        """Integral over {t >= 0, sum t <= 1} in ``nvars`` dimensions.

        Uses the Dirichlet formula; exact for Fraction coefficients.
        """
        d = self.nvars
        total = 0
        for e, c in self.terms.items():
            num = prod(factorial(k) for k in e)
            total += c * Fraction(num, factorial(sum(e) + d))
        return total

    def integrate_simplex(self, vertices):
        """Integral over the full-dimensional simplex with the given ``nvars+1`` vertices."""
        from .scalar import det

        d = self.nvars
        if len(vertices) != d + 1:
            raise ValueError("a d-simplex needs d+1 vertices")
        v0 = vertices[0]
        jac = [[vertices[j + 1][i] - v0[i] for j in range(d)] for i in range(d)]
        vol_scale = abs(det(jac)) if d else 1
        pulled = self.compose_affine(jac, v0)
        return vol_scale * pulled.integrate_standard_simplex()

    def integrate_embedded_simplex(self, vertices):
        """Integral of ``self`` (in ambient coords) pulled back along a parametrized k-simplex.

        Returns ``int_{std simplex} p(v0 + J t) dt`` without any volume factor,
        which is what pairing a form with an oriented simplex needs.
        """
        k = len(vertices) - 1
        v0 = vertices[0]
        jac = [[vertices[j + 1][i] - v0[i] for j in range(k)] for i in range(self.nvars)]
        return self.compose_affine(jac, v0).integrate_standard_simplex()

    def to_float(self):
        return self.map_coeffs(float)
