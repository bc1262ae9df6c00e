"""Simplex quadrature rules.

Grundmann-Moeller rules have rational nodes and weights, so in rational
mode they integrate polynomials up to their degree exactly.
"""
from __future__ import annotations

import itertools
from fractions import Fraction
from functools import lru_cache
from math import factorial

import numpy as np


def _compositions(total, parts):
    """All tuples of ``parts`` non-negative ints summing to ``total``."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


@lru_cache(maxsize=None)
def grundmann_moeller(dim, degree):
    """Rule on the reference simplex exact up to ``degree``.

    Returns ``(bary, weights)``: barycentric node coordinates (tuples of
    Fractions of length ``dim+1``) and weights that sum to 1, i.e. the rule
    approximates the *average* of f over the simplex.
    """
    s = max(0, (degree - 1 + 1) // 2)
    d = 2 * s + 1
    n = dim
    nodes = {}
    for i in range(s + 1):
        w = Fraction((-1) ** i * (d + n - 2 * i) ** d,
                     2 ** (2 * s) * factorial(i) * factorial(d + n - i))
        w *= factorial(n)
        den = d + n - 2 * i
        for beta in _compositions(s - i, n + 1):
            x = tuple(Fraction(2 * b + 1, den) for b in beta)
            nodes[x] = nodes.get(x, 0) + w
    bary = tuple(nodes)
    weights = tuple(nodes[x] for x in bary)
    return bary, weights


def rule_degree(degree):
    """Actual exactness degree of the rule built for ``degree`` (always odd)."""
    return 2 * max(0, degree // 2) + 1


def integrate_on_simplex(f, vertices, degree, volume, exact=False):
    """Apply the rule to ``f`` on the simplex with given vertices and volume."""
    bary, weights = grundmann_moeller(len(vertices) - 1, degree)
    total = 0
    if exact:
        for lam, w in zip(bary, weights):
            x = tuple(sum(l * v[j] for l, v in zip(lam, vertices)) for j in range(len(vertices[0])))
            total += w * f(x)
        return total * volume
    verts = np.array([[float(c) for c in v] for v in vertices])
    lam = np.array([[float(c) for c in b] for b in bary])
    pts = lam @ verts
    vals = np.array([float(f(tuple(p))) for p in pts])
    return float(np.dot(np.array([float(w) for w in weights]), vals)) * float(volume)


def gauss_legendre(m, a=0.0, b=1.0):
    x, w = np.polynomial.legendre.leggauss(m)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


def tensor_gauss(m, dims):
    x, w = gauss_legendre(m)
    pts = np.array(list(itertools.product(x, repeat=dims)))
    wts = np.prod(np.array(list(itertools.product(w, repeat=dims))), axis=1)
    return pts, wts
