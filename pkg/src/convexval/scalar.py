"""Scalar modes: exact rationals (``fractions.Fraction``) or float64.

Every geometry object records its mode; operations refuse to mix them.
"""
from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational

import numpy as np

from .errors import ModeMismatchError

RATIONAL = "rational"
FLOAT = "float"
MODES = (RATIONAL, FLOAT)

# tolerance used for float-mode geometric decisions
EPS_GEOM = 1e-9


def check_mode(mode):
    if mode not in MODES:
        raise ValueError(f"unknown scalar mode {mode!r}; expected one of {MODES}")
    return mode


def to_rational(x) -> Fraction:
    """Convert ``x`` to a Fraction without binary rounding surprises.

    Floats go through their shortest repr, so ``0.1`` becomes ``1/10``.
    Strings of the form ``"p/q"`` are accepted.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, (float, np.floating)):
        if not np.isfinite(x):
            raise ValueError(f"cannot represent {x!r} exactly")
        return Fraction(repr(float(x)))
    if isinstance(x, np.integer):
        return Fraction(int(x))
    raise TypeError(f"cannot convert {type(x).__name__} to a rational")


def to_scalar(x, mode):
    if mode == RATIONAL:
        return to_rational(x)
    if isinstance(x, str):
        return float(Fraction(x))
    return float(x)


def convert_vector(v, mode):
    return tuple(to_scalar(c, mode) for c in v)


def common_mode(*objs):
    """Return the shared ``mode`` attribute of ``objs`` or raise."""
    modes = {o.mode for o in objs if o is not None}
    if len(modes) > 1:
        raise ModeMismatchError(f"cannot mix scalar modes {sorted(modes)} in one operation")
    return modes.pop() if modes else RATIONAL


def format_scalar(x):
    """Serialize: rationals as ``"p/q"`` strings, floats as floats."""
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    return float(x)


def parse_scalar(x, mode):
    return to_scalar(x, mode)


def zero(mode):
    return Fraction(0) if mode == RATIONAL else 0.0


def one(mode):
    return Fraction(1) if mode == RATIONAL else 1.0


def dot(u, v):
    return sum((a * b for a, b in zip(u, v)), 0)


def sub(u, v):
    return tuple(a - b for a, b in zip(u, v))


def add(u, v):
    return tuple(a + b for a, b in zip(u, v))


def scale(c, v):
    return tuple(c * a for a in v)


def det(rows):
    """Determinant of a small square matrix, exact for Fractions and ints.

    Fraction-free for integer input (Bareiss); plain elimination otherwise.
    """
    m = [list(r) for r in rows]
    n = len(m)
    if n == 0:
        return 1
    if all(isinstance(x, int) for r in m for x in r):
        return _bareiss(m)
    if all(isinstance(x, (int, Fraction)) for r in m for x in r):
        # clear denominators row by row, then stay in integers
        scale = 1
        int_rows = []
        for r in m:
            den = math.lcm(*(Fraction(x).denominator for x in r))
            scale *= den
            int_rows.append([int(x * den) if isinstance(x, int)
                             else x.numerator * (den // x.denominator) for x in r])
        return Fraction(_bareiss(int_rows), scale)
    sign = 1
    for k in range(n):
        piv = next((i for i in range(k, n) if m[i][k] != 0), None)
        if piv is None:
            return 0 * m[0][0]
        if piv != k:
            m[k], m[piv] = m[piv], m[k]
            sign = -sign
        pk = m[k][k]
        for i in range(k + 1, n):
            f = m[i][k]
            if f != 0:
                f = f / pk
                row_k = m[k]
                row_i = m[i]
                for j in range(k, n):
                    row_i[j] -= f * row_k[j]
    out = sign
    for k in range(n):
        out = out * m[k][k]
    return out


def _bareiss(m):
    n = len(m)
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            piv = next((i for i in range(k + 1, n) if m[i][k] != 0), None)
            if piv is None:
                return 0
            m[k], m[piv] = m[piv], m[k]
            sign = -sign
        mkk = m[k][k]
        for i in range(k + 1, n):
            mik = m[i][k]
            row_i = m[i]
            row_k = m[k]
            for j in range(k + 1, n):
                row_i[j] = (row_i[j] * mkk - mik * row_k[j]) // prev
        prev = mkk
    return sign * m[n - 1][n - 1]


def cofactor_normal(vectors):
    """Generalized cross product of ``d-1`` vectors in R^d.

    The result is orthogonal to every input vector; zero iff they are
    linearly dependent.
    """
    d = len(vectors) + 1
    out = []
    for i in range(d):
        minor = [[v[j] for j in range(d) if j != i] for v in vectors]
        c = det(minor) if minor else 1
        out.append(c if i % 2 == 0 else -c)
    # sign chosen so that det([*vectors, out]) > 0 when independent
    if (d - 1) % 2 == 1:
        out = [-c for c in out]
    return tuple(out)


def rank(vectors, mode=RATIONAL, tol=EPS_GEOM):
    """Rank of a list of vectors; exact in rational mode."""
    if not vectors:
        return 0
    if mode == FLOAT:
        a = np.asarray(vectors, dtype=float)
        if a.size == 0:
            return 0
        s = np.linalg.svd(a, compute_uv=False)
        scale_ = max(1.0, float(np.abs(a).max()))
        return int(np.sum(s > tol * scale_))
    return len(row_echelon_pivots(vectors))


def row_echelon_pivots(vectors):
    """Pivot columns of the exact row echelon form of ``vectors``."""
    m = [list(map(Fraction, v)) for v in vectors]
    if not m:
        return []
    ncols = len(m[0])
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        for i in range(r + 1, len(m)):
            if m[i][c] != 0:
                f = m[i][c] / m[r][c]
                for j in range(c, ncols):
                    m[i][j] -= f * m[r][j]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return pivots


def solve(a, b):
    """Solve the square system ``a x = b`` exactly (Fractions) by elimination."""
    n = len(a)
    m = [list(map(Fraction, row)) + [Fraction(bi)] for row, bi in zip(a, b)]
    for k in range(n):
        piv = next((i for i in range(k, n) if m[i][k] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular system")
        m[k], m[piv] = m[piv], m[k]
        pk = m[k][k]
        for i in range(n):
            if i != k and m[i][k] != 0:
                f = m[i][k] / pk
                for j in range(k, n + 1):
                    m[i][j] -= f * m[k][j]
    return [m[i][n] / m[i][i] for i in range(n)]


def nullspace(vectors):
    """Exact basis of {x : <v, x> = 0 for all v in vectors}."""
    if not vectors:
        raise ValueError("need at least one vector to infer the dimension")
    ncols = len(vectors[0])
    m = [list(map(Fraction, v)) for v in vectors]
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        pv = m[r][c]
        m[r] = [x / pv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        x = [Fraction(0)] * ncols
        x[fc] = Fraction(1)
        for row, pc in enumerate(pivots):
            x[pc] = -m[row][fc]
        basis.append(tuple(x))
    return basis
