"""Reach estimation and the reach bound for images of convex bodies under diffeomorphisms."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import scalar as sc
from .errors import DegenerateError
from .polytope import Polytope


class SparseSampleWarning(UserWarning):
    """The boundary sample is too coarse for the reported reach."""


@dataclass
class ReachReport:
    value: float
    resolution: float
    pairs: int

    def __float__(self):
        return self.value


def _cone_distance(v, gens):
    """Distance from rows of ``v`` to the convex cone spanned by ``gens`` (one or two rays, or a halfplane)."""
    kind, data = gens
    if kind == "halfspace":
        return np.maximum(0.0, v @ data)
    if kind == "line":
        return np.abs(v @ data)
    # planar cone between rays a and b (angle < pi)
    a, b = data
    cross_ab = a[0] * b[1] - a[1] * b[0]
    ca = (v[:, 0] * b[1] - v[:, 1] * b[0]) / cross_ab
    cb = (a[0] * v[:, 1] - a[1] * v[:, 0]) / cross_ab
    inside = (ca >= 0) & (cb >= 0)

    def ray(r):
        t = np.maximum(0.0, v @ r) / (r @ r)
        return np.linalg.norm(v - t[:, None] * r[None, :], axis=1)

    return np.where(inside, 0.0, np.minimum(ray(a), ray(b)))


def federer_reach(points, cones, cap=None, min_separation=0.0):
    """``inf |x1 - x0|^2 / (2 dist(x1 - x0, Tan(x0)))`` over all sample pairs.

    ``cones[i]`` describes the tangent cone at ``points[i]`` as
    ``("halfspace", outward normal)``, ``("line", unit normal)`` or
    ``("cone", (ray_a, ray_b))``. Pairs closer than ``min_separation`` are
    skipped; with estimated tangents they are dominated by normal noise.
    """
    pts = np.asarray(points, dtype=float)
    best = math.inf
    for i, cone in enumerate(cones):
        v = pts - pts[i]
        d2 = np.einsum("ij,ij->i", v, v)
        dist = _cone_distance(v, cone)
        mask = (dist > 1e-15) & (d2 > min_separation ** 2)
        if np.any(mask):
            best = min(best, float(np.min(d2[mask] / (2 * dist[mask]))))
    if cap is not None:
        best = min(best, cap)
    return best


def _resolution(points):
    from scipy.spatial import cKDTree

    pts = np.asarray(points, dtype=float)
    if len(pts) < 2:
        return 0.0
    d, _ = cKDTree(pts).query(pts, k=2)
    return float(d[:, 1].max())


def reach_estimate(points, interior=None, normals=None, cap=None):
    """Point-pair reach estimate from a dense boundary sample.

    Without an interior oracle the sample is treated as the set itself (a
    curve or surface): tangent spaces are lines. With an oracle the set is
    the solid region and tangent cones are halfspaces with outward normals.
    Normals are estimated by local principal components unless given.
    """
    pts = np.asarray(points, dtype=float)
    exact_normals = normals is not None
    if normals is None:
        normals = _pca_normals(pts)
    normals = np.asarray(normals, dtype=float)
    if interior is not None:
        step = 1e-6 * (np.ptp(pts, axis=0).max() + 1.0)
        for i, p in enumerate(pts):
            if interior(p + step * normals[i]):
                normals[i] = -normals[i]
        cones = [("halfspace", nv) for nv in normals]
    else:
        cones = [("line", nv) for nv in normals]
    res = _resolution(pts)
    value = federer_reach(pts, cones, cap, min_separation=0.0 if exact_normals else 3 * res)
    if math.isfinite(value) and res > 0.5 * value:
        warnings.warn(f"sample spacing {res:.3g} is coarse relative to reach {value:.3g}",
                      SparseSampleWarning, stacklevel=2)
    return ReachReport(value, res, len(pts) * (len(pts) - 1))


def _pca_normals(pts, k=7):
    from scipy.spatial import cKDTree

    k = min(k, len(pts))
    _, idx = cKDTree(pts).query(pts, k=k)
    out = np.zeros_like(pts)
    for i, nb in enumerate(idx):
        q = pts[nb] - pts[nb].mean(axis=0)
        out[i] = np.linalg.svd(q)[2][-1]
    return out


def reach_estimate_polytope_or_points(x):
    """Reach of a convex polytope (infinite) or of a finite point set (half the closest gap)."""
    if isinstance(x, Polytope):
        return math.inf
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    if len(pts) < 2:
        return math.inf
    from scipy.spatial.distance import pdist

    return float(pdist(pts).min() / 2)


# -- images of polygons under diffeomorphisms -------------------------------------

def image_boundary_sample(g, polygon, per_edge=400):
    """Points of ``g(∂K)`` with their exact tangent cones (K a convex polygon)."""
    verts = polygon.vertex_array()
    m = len(verts)
    pts, cones = [], []
    for i in range(m):
        a, b = verts[i], verts[(i + 1) % m]
        prev = verts[i - 1]
        jac = g.jacobian(a)
        ra = jac @ (b - a)
        rb = jac @ (prev - a)
        pts.append(g.forward(a))
        cones.append(("cone", (ra, rb)))
        e = b - a
        outward = np.array([e[1], -e[0]])
        for s in (np.arange(1, per_edge) / per_edge):
            p = a + s * e
            jp = g.jacobian(p)
            nrm = np.linalg.solve(jp.T, outward)
            pts.append(g.forward(p))
            cones.append(("halfspace", nrm / np.linalg.norm(nrm)))
    return np.array(pts), cones


def image_reach(g, polygon, per_edge=400, cap=None):
    pts, cones = image_boundary_sample(g, polygon, per_edge)
    return federer_reach(pts, cones, cap)


def operator_norms(g, domain_points):
    """``sup |D(g^-1)|`` and ``sup |D^2 g|`` over sample points of the domain."""
    jacs = np.array([g.jacobian(x) for x in domain_points])
    if np.abs(np.linalg.det(jacs)).min() < 1e-14:
        raise DegenerateError("Jacobian is singular on the domain")
    inv_norm = float(np.linalg.norm(np.linalg.inv(jacs), 2, axis=(1, 2)).max())
    second = 0.0
    seen = set()
    for x in domain_points:
        t = g.second_derivative(x)
        key = t.tobytes()
        if key not in seen:
            seen.add(key)
            second = max(second, bilinear_norm(t))
    return inv_norm, second


def bilinear_norm(t, samples=720):
    """``sup_{|v|=|w|=1} |T(v, w)|`` for a vector-valued bilinear form ``T[i, j, k]``."""
    t = np.asarray(t, dtype=float)
    if not np.any(t):
        return 0.0
    n = t.shape[1]
    if n == 1:
        return float(np.linalg.norm(t[:, 0, 0]))
    if n == 2:
        th = np.linspace(0, np.pi, samples, endpoint=False)
        dirs = np.stack([np.cos(th), np.sin(th)], axis=1)
    else:
        from .bodies import geodesic_grid

        dirs = geodesic_grid(3)
    # sup over w of |T(v, w)| is the spectral norm of the matrix T(v, .)
    mats = np.einsum("ijk,dj->dik", t, dirs)
    best = float(np.linalg.norm(mats, 2, axis=(1, 2)).max())
    # sampled sup undershoots by at most a factor cos(pi / (2 samples))
    return best / math.cos(math.pi / (2 * len(dirs))) if n == 2 else best


def domain_grid(polygon, delta, density=40):
    """Grid points of ``K + delta B``."""
    verts = polygon.vertex_array()
    lo = verts.min(axis=0) - delta
    hi = verts.max(axis=0) + delta
    axes = [np.linspace(l, h, density) for l, h in zip(lo, hi)]
    grid = np.array(np.meshgrid(*axes)).reshape(len(axes), -1).T
    return grid[distance_to_polytope(polygon, grid) <= delta]


def distance_to_polytope(p, x):
    """Euclidean distance from each row of ``x`` to a polygon or polytope ``p``."""
    x = np.atleast_2d(np.asarray(x, float))
    verts = p.vertex_array()
    if p.dim == 2 and p.is_full_dimensional:
        inside = np.ones(len(x), bool)
        for f in p.facets:
            inside &= x @ np.array([float(c) for c in f.normal]) <= float(f.offset) + 1e-12
        best = np.full(len(x), np.inf)
        for i, j in p.edges():
            a, b = verts[i], verts[j]
            e = b - a
            t = np.clip((x - a) @ e / (e @ e), 0.0, 1.0)
            best = np.minimum(best, np.linalg.norm(x - a - t[:, None] * e, axis=1))
        return np.where(inside, 0.0, best)
    return np.array([_dist_to_polytope(p, row) for row in x])


def _dist_to_polytope(p, x):
    from scipy.optimize import minimize

    verts = p.vertex_array()
    if p.contains(tuple(float(c) for c in x)):
        return 0.0
    m = len(verts)
    res = minimize(lambda w: np.sum((np.exp(w) / np.exp(w).sum() @ verts - x) ** 2),
                   np.zeros(m), method="BFGS")
    return float(np.sqrt(res.fun))


def reach_bound(g, polygon, delta, grid=None, norms=None):
    """``min{delta/2 |Dg^-1|^-1, |Dg^-1|^-2 |D^2 g|^-1}`` with norms sampled on ``K + delta B``."""
    if norms is None:
        grid = domain_grid(polygon, delta) if grid is None else grid
        norms = operator_norms(g, grid)
    inv_norm, second = norms
    first = delta / 2 / inv_norm
    if second == 0:
        return first
    return min(first, 1.0 / (inv_norm ** 2 * second))


# -- monotonicity probes -------------------------------------------------------

def federer_monotonicity_probe(points, normals, delta0):
    """Minimum of ``<x1-x0, n1-n0> + |x1-x0|^2 / delta0`` over pairs (non-negative if reach > delta0)."""
    x = np.asarray(points, float)
    nrm = np.asarray(normals, float)
    dx = x[:, None, :] - x[None, :, :]
    dn = nrm[:, None, :] - nrm[None, :, :]
    val = np.einsum("ijk,ijk->ij", dx, dn) + np.einsum("ijk,ijk->ij", dx, dx) / delta0
    return float(val.min())


def strict_convexity_probe(body, delta1, count=200):
    """Minimum of ``<x1-x0, n1-n0> - delta1 |x1-x0|^2`` over boundary pairs of a support body."""
    from .bodies import circle_directions, fibonacci_sphere

    dirs = circle_directions(count) if body.dim == 2 else fibonacci_sphere(count)
    pts = np.array([body.grad(u) for u in dirs])
    dx = pts[:, None, :] - pts[None, :, :]
    dn = dirs[:, None, :] - dirs[None, :, :]
    val = np.einsum("ijk,ijk->ij", dx, dn) - delta1 * np.einsum("ijk,ijk->ij", dx, dx)
    return float(val.min())
