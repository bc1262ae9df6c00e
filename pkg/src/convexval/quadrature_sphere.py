"""Quadrature on reference simplices and on spherical simplices."""
from __future__ import annotations

from functools import lru_cache

import numpy as np

MAX_ARC = np.pi / 2


@lru_cache(maxsize=64)
def reference_rule(dim, q):
    """Nodes (N, dim) and weights on the standard simplex; weights sum to 1/dim!."""
    if dim == 0:
        return np.zeros((1, 0)), np.ones(1)
    x, w = np.polynomial.legendre.leggauss(q)
    x = 0.5 * (x + 1)
    w = 0.5 * w
    if dim == 1:
        return x[:, None], w
    if dim == 2:
        a, b = np.meshgrid(x, x, indexing="ij")
        wa, wb = np.meshgrid(w, w, indexing="ij")
        s = a.ravel()
        t = (b * (1 - a)).ravel()
        return np.stack([s, t], axis=1), (wa * wb * (1 - a)).ravel()
    raise ValueError("reference rules are provided up to dimension 2")


def _angle(a, b):
    return float(np.arctan2(np.linalg.norm(np.cross(a, b)) if len(a) == 3 else abs(a[0] * b[1] - a[1] * b[0]),
                            float(a @ b)))


def _normalize(v):
    return v / np.linalg.norm(v)


def subdivide(corners, max_arc=MAX_ARC):
    """Split a spherical simplex until every edge spans at most ``max_arc``."""
    corners = tuple(np.asarray(c, dtype=float) for c in corners)
    k = len(corners)
    if k <= 1:
        return [corners]
    if k == 2:
        a, b = corners
        if _angle(a, b) <= max_arc + 1e-12:
            return [corners]
        m = _normalize(a + b)
        return subdivide((a, m), max_arc) + subdivide((m, b), max_arc)
    if k == 3:
        a, b, c = corners
        if max(_angle(a, b), _angle(b, c), _angle(c, a)) <= max_arc + 1e-12:
            return [corners]
        ab, bc, ca = _normalize(a + b), _normalize(b + c), _normalize(c + a)
        out = []
        for tri in ((a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)):
            out += subdivide(tri, max_arc)
        return out
    raise ValueError("spherical simplices up to dimension 2 are supported")


def spherical_nodes(corners, q):
    """Nodes ``u``, tangent frames ``du/dt`` and weights for ``t`` on the reference simplex.

    The simplex is parametrized by normalizing the flat simplex through its
    corners; frames carry the exact Jacobian of the normalization.
    """
    corners = np.asarray(corners, dtype=float)
    k = len(corners) - 1
    ref, w = reference_rule(k, q)
    q0 = corners[0]
    edges = corners[1:] - q0
    v = q0 + ref @ edges
    r = np.linalg.norm(v, axis=1)
    u = v / r[:, None]
    frames = []
    for b in range(k):
        e = edges[b]
        proj = e[None, :] - (u @ e)[:, None] * u
        frames.append(proj / r[:, None])
    frames = np.stack(frames, axis=1) if frames else np.zeros((len(u), 0, corners.shape[1]))
    return u, frames, w


def flat_nodes(vertices, q):
    """Nodes, tangent frames and weights for the flat simplex with given vertices."""
    vertices = np.asarray(vertices, dtype=float)
    k = len(vertices) - 1
    ref, w = reference_rule(k, q)
    x = vertices[0] + ref @ (vertices[1:] - vertices[0])
    frame = (vertices[1:] - vertices[0])
    frames = np.broadcast_to(frame, (len(x),) + frame.shape)
    return x, frames, w
