"""Smooth convex bodies given by their support functions.

A :class:`SupportFunction` bundles closed-form evaluators for a
1-homogeneous function ``h`` on R^n (n = 2 or 3), its gradient and its
Hessian. A :class:`SupportBody` is one that passed the convexity checks,
so ``grad(u)`` is the boundary point with outer normal ``u``.
"""
from __future__ import annotations

import math
import warnings
from collections import namedtuple
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import scalar as sc
from .errors import ConvexityError, DegenerateError, DimensionError, NotStrictlyConvexError

VALIDATION_TOL = 1e-10
PSD_MARGIN = 1e-8

CurvatureRange = namedtuple("CurvatureRange", "kmin kmax bound")


class NonStrictDirectionWarning(UserWarning):
    """The supporting set in this direction is not a single point."""


class SupportFunction:
    """1-homogeneous function with gradient and Hessian evaluators."""

    def __init__(self, dim, h, grad, hess, tag="custom", params=None, flat=None):
        if dim not in (2, 3):
            raise DimensionError("support bodies are supported in dimensions 2 and 3")
        self.dim = dim
        self._h = h
        self._grad = grad
        self._hess = hess
        self.tag = tag
        self.params = params or {}
        # optional predicate flagging directions where the face is not a point
        self._flat = flat

    def h(self, u):
        return float(self._h(np.asarray(u, dtype=float)))

    def grad(self, u):
        return np.asarray(self._grad(np.asarray(u, dtype=float)), dtype=float)

    def hess(self, u):
        return np.asarray(self._hess(np.asarray(u, dtype=float)), dtype=float)

    def spherical_hessian(self, u):
        """Hessian restricted to the tangent space of the sphere at ``u/|u|``."""
        u = np.asarray(u, dtype=float)
        u = u / np.linalg.norm(u)
        frame = tangent_frame(u)
        return frame @ self.hess(u) @ frame.T

    def __call__(self, u):
        return self.h(u)

    def __add__(self, other):
        if not isinstance(other, SupportFunction):
            return NotImplemented
        _same_dim(self, other)
        return SupportFunction(
            self.dim,
            lambda u: self._h(u) + other._h(u),
            lambda u: self._grad(u) + other._grad(u),
            lambda u: self._hess(u) + other._hess(u),
            tag="sum", params={"terms": (self, other)},
            flat=_either_flat(self, other))

    def __rmul__(self, c):
        c = float(c)
        return SupportFunction(self.dim, lambda u: c * self._h(u), lambda u: c * self._grad(u),
                               lambda u: c * self._hess(u), tag="scaled",
                               params={"factor": c, "base": self}, flat=self._flat)

    def __neg__(self):
        return (-1.0) * self

    def __sub__(self, other):
        return self + (-other)

    def is_flat(self, u):
        return bool(self._flat and self._flat(np.asarray(u, dtype=float)))

    def translate(self, b):
        b = np.asarray(b, dtype=float)
        out = SupportFunction(self.dim, lambda u: self._h(u) + b @ u, lambda u: self._grad(u) + b,
                              self._hess, tag="translated", params={"base": self, "shift": b},
                              flat=self._flat)
        return as_body(out, validate=False) if isinstance(self, SupportBody) else out


class SupportBody(SupportFunction):
    """A support function certified convex on a validation grid."""

    def __add__(self, other):
        out = SupportFunction.__add__(self, other)
        if out is NotImplemented:
            return out
        if isinstance(other, SupportBody):
            return as_body(out, validate=False)
        return out

    def __rmul__(self, c):
        out = SupportFunction.__rmul__(self, c)
        return as_body(out, validate=False) if c >= 0 else out

    def gradient_point(self, u):
        return gradient_point(self, u)


def _same_dim(a, b):
    if a.dim != b.dim:
        raise DimensionError(f"dimension mismatch: {a.dim} vs {b.dim}")


def _either_flat(a, b):
    if a._flat is None and b._flat is None:
        return None
    return lambda u: (a._flat is not None and a._flat(u)) or (b._flat is not None and b._flat(u))


def as_body(f, validate=True, grid=None):
    """Promote a :class:`SupportFunction` to a :class:`SupportBody`."""
    if validate:
        report = validate_support(f, grid)
        if not report["ok"]:
            raise ConvexityError(f"not a support function: {report}")
    body = SupportBody(f.dim, f._h, f._grad, f._hess, f.tag, f.params, f._flat)
    return body


def tangent_frame(u):
    """Rows form an orthonormal basis of ``u^⊥`` (u a unit vector)."""
    n = len(u)
    if n == 2:
        return np.array([[-u[1], u[0]]])
    a = np.array([1.0, 0.0, 0.0]) if abs(u[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = a - (a @ u) * u
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(u, e1)
    return np.array([e1, e2])


# -- presets -------------------------------------------------------------

def ball(r=1.0, dim=2, center=None):
    r = float(r)
    c = np.zeros(dim) if center is None else np.asarray(center, dtype=float)

    def h(u):
        return r * np.linalg.norm(u) + c @ u

    def grad(u):
        return r * u / np.linalg.norm(u) + c

    def hess(u):
        nu = np.linalg.norm(u)
        v = u / nu
        return r * (np.eye(len(u)) - np.outer(v, v)) / nu

    return SupportBody(dim, h, grad, hess, tag="ball", params={"r": r, "center": c})


def ellipsoid(*axes, matrix=None, center=None):
    """Ellipsoid ``{x : |A^{-1}(x-c)| <= 1}``; ``h(u) = sqrt(u^T A A^T u) + c.u``."""
    if matrix is None:
        a = np.diag([float(x) for x in axes])
    else:
        a = np.asarray(matrix, dtype=float)
    dim = a.shape[0]
    m = a @ a.T
    c = np.zeros(dim) if center is None else np.asarray(center, dtype=float)

    def h(u):
        return math.sqrt(u @ m @ u) + c @ u

    def grad(u):
        return m @ u / math.sqrt(u @ m @ u) + c

    def hess(u):
        q = math.sqrt(u @ m @ u)
        mu = m @ u
        return m / q - np.outer(mu, mu) / q ** 3

    return SupportBody(dim, h, grad, hess, tag="ellipsoid",
                       params={"axes": tuple(float(x) for x in axes), "matrix": a, "center": c})


def polar_function(f, df, ddf, tag="polar", params=None):
    """Planar ``h(u) = |u| f(theta)`` from ``f`` and its first two derivatives."""

    def h(u):
        return math.hypot(u[0], u[1]) * f(math.atan2(u[1], u[0]))

    def grad(u):
        r = math.hypot(u[0], u[1])
        t = math.atan2(u[1], u[0])
        er = np.array([math.cos(t), math.sin(t)])
        et = np.array([-math.sin(t), math.cos(t)])
        return f(t) * er + df(t) * et

    def hess(u):
        r = math.hypot(u[0], u[1])
        t = math.atan2(u[1], u[0])
        et = np.array([-math.sin(t), math.cos(t)])
        return (f(t) + ddf(t)) / r * np.outer(et, et)

    return SupportFunction(2, h, grad, hess, tag=tag, params=params or {})


def harmonic(k, amplitude=1.0, base=0.0):
    """``h = |u| (base + amplitude cos(k theta))``; convex iff ``base >= (k^2-1) amplitude``."""
    a, b = float(amplitude), float(base)
    return polar_function(lambda t: b + a * math.cos(k * t),
                          lambda t: -a * k * math.sin(k * t),
                          lambda t: -a * k * k * math.cos(k * t),
                          tag="harmonic", params={"k": k, "amplitude": a, "base": b})


def smoothed_polytope(polytope, eps):
    """``h_P + eps |u|``: the parallel body of a polytope."""
    verts = polytope.vertex_array()
    dim = polytope.dim
    eps = float(eps)

    def h(u):
        return float(np.max(verts @ u)) + eps * np.linalg.norm(u)

    def grad(u):
        vals = verts @ u
        return verts[int(np.argmax(vals))] + eps * u / np.linalg.norm(u)

    def hess(u):
        nu = np.linalg.norm(u)
        v = u / nu
        return eps * (np.eye(dim) - np.outer(v, v)) / nu

    def flat(u):
        vals = verts @ u
        top = np.max(vals)
        return int(np.sum(vals >= top - 1e-12 * max(1.0, abs(top)))) > 1 and eps == 0

    body = SupportBody(dim, h, grad, hess, tag="smoothpoly",
                       params={"polytope": polytope, "eps": eps}, flat=flat)
    return body


def point_body(dim, at=None):
    return ball(0.0, dim, center=at)


def parse_preset(text, polytopes=None):
    """Parse ``ball:r``, ``ellipsoid:a,b[,c]`` or ``smoothpoly:<id>:eps``."""
    kind, _, rest = text.partition(":")
    kind = kind.strip().lower()
    if kind == "ball":
        parts = [p for p in rest.split(",") if p]
        r = float(Fraction(parts[0])) if parts else 1.0
        dim = int(parts[1]) if len(parts) > 1 else 2
        return ball(r, dim)
    if kind == "ellipsoid":
        axes = [float(Fraction(p)) for p in rest.split(",") if p]
        if len(axes) not in (2, 3):
            raise DimensionError("ellipsoid needs 2 or 3 semi-axes")
        return ellipsoid(*axes)
    if kind == "smoothpoly":
        pid, _, eps = rest.rpartition(":")
        if polytopes is None or pid not in polytopes:
            raise KeyError(f"unknown polytope id {pid!r}")
        return smoothed_polytope(polytopes[pid], float(Fraction(eps)))
    raise ValueError(f"unknown body preset {text!r}")


# -- direction grids --------------------------------------------------------

def circle_directions(m, phase=0.0):
    t = phase + 2 * np.pi * np.arange(m) / m
    return np.stack([np.cos(t), np.sin(t)], axis=1)


@lru_cache(maxsize=8)
def geodesic_grid(subdivisions=4):
    """Vertices of a subdivided icosahedron; 4 subdivisions give 2562 points."""
    p = (1 + 5 ** 0.5) / 2
    verts = [(-1, p, 0), (1, p, 0), (-1, -p, 0), (1, -p, 0), (0, -1, p), (0, 1, p),
             (0, -1, -p), (0, 1, -p), (p, 0, -1), (p, 0, 1), (-p, 0, -1), (-p, 0, 1)]
    verts = [np.array(v, float) / np.linalg.norm(v) for v in verts]
    faces = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11), (1, 5, 9), (5, 11, 4),
             (11, 10, 2), (10, 7, 6), (7, 1, 8), (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8),
             (3, 8, 9), (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    for _ in range(subdivisions):
        cache = {}

        def mid(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                v = verts[i] + verts[j]
                verts.append(v / np.linalg.norm(v))
                cache[key] = len(verts) - 1
            return cache[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new
    return np.array(verts)


def default_grid(dim):
    return circle_directions(720) if dim == 2 else geodesic_grid(4)


# -- operations --------------------------------------------------------

def gradient_point(body, u):
    """Boundary point with outer normal ``u``; warns where the face is not a point."""
    u = np.asarray(u, dtype=float)
    if len(u) != body.dim:
        raise DimensionError("direction has the wrong length")
    if not np.any(u):
        raise ValueError("zero direction")
    if body.is_flat(u):
        warnings.warn(f"supporting set in direction {u} is not a single point",
                      NonStrictDirectionWarning, stacklevel=2)
    else:
        sh = body.spherical_hessian(u)
        if np.linalg.eigvalsh(sh).min() <= 0 and body.tag not in ("ball", "smoothpoly"):
            warnings.warn(f"spherical Hessian is singular at {u}", NonStrictDirectionWarning,
                          stacklevel=2)
    return body.grad(u)


def validate_support(f, grid=None, samples=200, seed=0):
    """Sampled checks of homogeneity, the Euler relation, PSD Hessian and sublinearity."""
    grid = default_grid(f.dim) if grid is None else grid
    rng = np.random.default_rng(seed)
    worst = {"homogeneity": 0.0, "euler": 0.0, "sublinear": 0.0, "min_eig": math.inf}
    for u in grid:
        hu = f.h(u)
        scale = max(1.0, abs(hu))
        for c in (0.5, 3.0):
            worst["homogeneity"] = max(worst["homogeneity"], abs(f.h(c * u) - c * hu) / scale)
        worst["euler"] = max(worst["euler"], abs(f.grad(u) @ u - hu) / scale)
        worst["min_eig"] = min(worst["min_eig"], float(np.linalg.eigvalsh(f.spherical_hessian(u)).min()))
    for _ in range(samples):
        u, v = rng.normal(size=(2, f.dim))
        worst["sublinear"] = max(worst["sublinear"], f.h(u + v) - f.h(u) - f.h(v))
    worst["ok"] = (worst["homogeneity"] <= VALIDATION_TOL and worst["euler"] <= VALIDATION_TOL
                   and worst["min_eig"] >= -VALIDATION_TOL and worst["sublinear"] <= VALIDATION_TOL)
    return worst


def radii_of_curvature(body, u):
    return np.linalg.eigvalsh(body.spherical_hessian(u))


def curvature_range(bodies, weights, grid=None):
    """Principal-curvature range of ``sum w_i A_i`` sampled on a direction grid.

    Returns ``(kmin, kmax, bound)``; ``bound`` is the constant C built from
    the per-body radius extremes, with ``1/C <= kmin <= kmax <= C``.
    """
    if len(bodies) != len(weights) or not bodies:
        raise ValueError("need one weight per body")
    if any(w < 0 for w in weights):
        raise ValueError("weights must be non-negative")
    if abs(sum(weights) - 1) > 1e-12:
        raise ValueError("weights must sum to 1")
    dim = bodies[0].dim
    grid = default_grid(dim) if grid is None else grid
    rmin, rmax = math.inf, 0.0
    per_body = [[math.inf, 0.0] for _ in bodies]
    for u in grid:
        total = 0
        for i, (b, w) in enumerate(zip(bodies, weights)):
            sh = b.spherical_hessian(u)
            ev = np.linalg.eigvalsh(sh)
            per_body[i][0] = min(per_body[i][0], ev.min())
            per_body[i][1] = max(per_body[i][1], ev.max())
            total = total + w * sh
        ev = np.linalg.eigvalsh(total)
        rmin, rmax = min(rmin, ev.min()), max(rmax, ev.max())
    if rmin <= 0 or any(lo <= 0 for lo, _ in per_body):
        raise NotStrictlyConvexError("a spherical Hessian is singular on the grid")
    lo = min(p[0] for p in per_body)
    hi = max(p[1] for p in per_body)
    bound = max(hi, 1.0 / lo)
    return CurvatureRange(float(1.0 / rmax), float(1.0 / rmin), float(bound))


def hessian_bound(f, grid=None):
    grid = default_grid(f.dim) if grid is None else grid
    return max(float(np.abs(np.linalg.eigvalsh(f.spherical_hessian(u))).max()) for u in grid)


def decompose_difference(f, grid=None, margin=PSD_MARGIN):
    """Write ``f = h_{A'} - h_{A''}`` with ``A'' = T * unit ball``.

    ``T`` is the smallest grid-validated value (doubling from the Hessian
    bound's scale, then bisection) for which ``H(f) + T I`` keeps its
    eigenvalues at least ``margin``. Returns ``(A', A'', T)``.
    """
    grid = default_grid(f.dim) if grid is None else grid
    lows = np.array([np.linalg.eigvalsh(f.spherical_hessian(u)).min() for u in grid])
    if not np.all(np.isfinite(lows)):
        raise ConvexityError("Hessian estimate is unbounded on the grid")

    def ok(t):
        return bool(lows.min() + t >= margin)

    if ok(0.0):
        t = 0.0
    else:
        hi = max(hessian_bound(f, grid), margin)
        while not ok(hi):
            hi *= 2
        lo = 0.0
        for _ in range(200):
            midpoint = 0.5 * (lo + hi)
            if ok(midpoint):
                hi = midpoint
            else:
                lo = midpoint
            if hi - lo <= 1e-12 * max(1.0, hi):
                break
        t = hi
    ball_t = ball(t, f.dim)
    a_prime = as_body(f + ball_t, validate=False)
    report = validate_support(a_prime, grid)
    if not report["ok"]:
        raise ConvexityError(f"shifted function failed validation: {report}")
    return a_prime, ball_t, t


def reconstruction_residual(f, a_prime, a_second, grid=None):
    grid = default_grid(f.dim) if grid is None else grid
    return max(abs(a_prime.h(u) - a_second.h(u) - f.h(u)) for u in grid)


# -- polytopal approximation --------------------------------------------------

def inscribed_polytope(body, directions, mode=sc.FLOAT):
    """Hull of the boundary points ``grad h(u)`` for the given directions."""
    from .polytope import convex_hull

    directions = np.asarray(directions, dtype=float)
    if len(directions) < body.dim + 1:
        raise DegenerateError("need at least n+1 directions")
    if np.linalg.matrix_rank(directions) < body.dim:
        raise DegenerateError("directions do not span R^n")
    pts = [tuple(body.grad(u)) for u in directions]
    return convex_hull(pts, mode)


def rational_circle_point(theta, max_den=10 ** 6):
    """Exact rational point on the unit circle near angle ``theta``."""
    t = Fraction(math.tan(theta / 2)).limit_denominator(max_den)
    d = 1 + t * t
    return ((1 - t * t) / d, 2 * t / d)


def rational_sphere_point(u, max_den=10 ** 6):
    """Exact rational point on the unit 2-sphere near the unit vector ``u``."""
    u = np.asarray(u, dtype=float)
    flip = u[2] > 0
    x, y, z = (u[0], u[1], -u[2]) if flip else u
    s = Fraction(x / (1 - z)).limit_denominator(max_den)
    t = Fraction(y / (1 - z)).limit_denominator(max_den)
    d = 1 + s * s + t * t
    p = (2 * s / d, 2 * t / d, (s * s + t * t - 1) / d)
    return (p[0], p[1], -p[2]) if flip else p


def fibonacci_sphere(m):
    i = np.arange(m) + 0.5
    phi = np.arccos(1 - 2 * i / m)
    theta = np.pi * (1 + 5 ** 0.5) * i
    return np.stack([np.cos(theta) * np.sin(phi), np.sin(theta) * np.sin(phi), np.cos(phi)], axis=1)


@lru_cache(maxsize=64)
def ball_surrogate(dim, m, mode=sc.RATIONAL, phase=0.0):
    """Inscribed polytope of the unit ball with ``m`` vertices on the sphere.

    In rational mode every vertex lies exactly on the unit sphere. In
    dimension 1 the ball is the segment [-1, 1].
    """
    from .polytope import convex_hull

    if dim == 1:
        return convex_hull([(-1,), (1,)], mode)
    if dim == 2:
        angles = phase + 2 * math.pi * np.arange(m) / m
        if mode == sc.RATIONAL:
            pts = [rational_circle_point(a) for a in angles]
        else:
            pts = [(math.cos(a), math.sin(a)) for a in angles]
        return convex_hull(pts, mode)
    if dim == 3:
        dirs = fibonacci_sphere(m)
        if mode == sc.RATIONAL:
            pts = [rational_sphere_point(u) for u in dirs]
        else:
            pts = [tuple(u) for u in dirs]
        return convex_hull(pts, mode)
    raise DimensionError("ball surrogates exist for dimensions 1, 2, 3")


def surrogate(body, m, mode=sc.FLOAT):
    """Inscribed polytope of a support body with ``m`` directions."""
    if body.dim == 2:
        dirs = circle_directions(m, phase=0.5 * math.pi / m)
    else:
        dirs = fibonacci_sphere(m)
    if body.tag == "ball" and mode == sc.RATIONAL and not np.any(body.params["center"]):
        from .polytope import affine_image

        r = Fraction(body.params["r"]).limit_denominator(10 ** 9)
        unit = ball_surrogate(body.dim, m, mode)
        return affine_image(unit, [[r if i == j else 0 for j in range(body.dim)]
                                   for i in range(body.dim)], None)
    return inscribed_polytope(body, dirs, mode)


def unit_ball_volume(n):
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def named_density(name, dim):
    """General (non-polynomial) densities available by name in scene files."""
    from .density import Density

    if name == "gaussian":
        return Density.general(dim, lambda x: math.exp(-sum(float(c) ** 2 for c in x)), name=name)
    if name == "cosine":
        return Density.general(dim, lambda x: 1.5 + math.cos(float(x[0])), name=name)
    raise KeyError(f"unknown density {name!r}")
