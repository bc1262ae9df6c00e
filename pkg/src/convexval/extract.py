"""Recover polynomial coefficients from values on integer lattice grids.

A polynomial whose exponents lie in a lower set ``E`` is determined by its
values on the nodes ``E`` themselves; the resulting Vandermonde system is
square and non-singular.
"""
from __future__ import annotations

import itertools
from fractions import Fraction
from math import prod

import numpy as np

from .errors import InvariantError


def lower_set(nvars, blocks):
    """Exponents ``alpha`` with ``sum(alpha[i] for i in idx) <= bound`` for every block."""
    per_var = [0] * nvars
    for idx, bound in blocks:
        for i in idx:
            per_var[i] = max(per_var[i], bound)
    out = []
    for alpha in itertools.product(*(range(b + 1) for b in per_var)):
        if all(sum(alpha[i] for i in idx) <= bound for idx, bound in blocks):
            out.append(alpha)
    return out


def _monomial(node, beta):
    return prod(x ** b for x, b in zip(node, beta))


def solve_exact(matrix, rhs):
    n = len(matrix)
    m = [list(map(Fraction, row)) + [Fraction(b)] for row, b in zip(matrix, rhs)]
    for k in range(n):
        piv = next((i for i in range(k, n) if m[i][k] != 0), None)
        if piv is None:
            raise InvariantError("Vandermonde system is singular")
        m[k], m[piv] = m[piv], m[k]
        inv = 1 / m[k][k]
        m[k] = [x * inv for x in m[k]]
        for i in range(n):
            if i != k and m[i][k] != 0:
                f = m[i][k]
                rk = m[k]
                m[i] = [a - f * b for a, b in zip(m[i], rk)]
    return [row[n] for row in m]


def fit_coefficients(values, exponents, exact, step=1):
    """Coefficients ``c_beta`` with ``sum c_beta (step*alpha)^beta = values[alpha]``.

    ``values`` maps each node ``alpha`` (an element of ``exponents``) to the
    sampled value at ``step * alpha``.
    """
    nodes = list(exponents)
    if exact:
        mat = [[_monomial(a, b) for b in exponents] for a in nodes]
        coeffs = solve_exact(mat, [values[a] for a in nodes])
        scale = [Fraction(step) ** sum(b) for b in exponents]
        return {b: c / s for b, c, s in zip(exponents, coeffs, scale)}
    mat = np.array([[float(_monomial(a, b)) for b in exponents] for a in nodes])
    rhs = np.array([float(values[a]) for a in nodes])
    coeffs = np.linalg.solve(mat, rhs)
    return {b: float(c) / float(step) ** sum(b) for b, c in zip(exponents, coeffs)}


def tensor_interpolate(values, nvars, degree, exact=True):
    """Coefficients from values on the full tensor grid ``{0..degree}^nvars``.

    Solves the Kronecker-structured Vandermonde system one axis at a time.
    """
    grid = list(range(degree + 1))
    vander = [[Fraction(x) ** k for k in range(degree + 1)] for x in grid]
    inv = _inverse(vander) if exact else np.linalg.inv(np.array(vander, dtype=float))
    arr = {idx: values[idx] for idx in itertools.product(grid, repeat=nvars)}
    for axis in range(nvars):
        new = {}
        for idx in arr:
            if idx[axis] != 0:
                continue
            line = [arr[idx[:axis] + (x,) + idx[axis + 1:]] for x in grid]
            for k in range(degree + 1):
                row = inv[k]
                new[idx[:axis] + (k,) + idx[axis + 1:]] = sum(row[j] * line[j] for j in range(degree + 1))
        arr = new
    return arr


def _inverse(m):
    n = len(m)
    cols = [solve_exact(m, [int(i == j) for i in range(n)]) for j in range(n)]
    return [[cols[j][i] for j in range(n)] for i in range(n)]
