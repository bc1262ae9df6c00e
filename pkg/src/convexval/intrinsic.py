"""Intrinsic volumes of polytopes from face volumes and external angles.

Independent of the valuation engine and of normal cycles, so it serves as
a cross-check for both.
"""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from . import scalar as sc
from .polytope import Polytope, convex_hull


def _orthonormal_affine_frame(p):
    pts = p.vertex_array()
    origin = pts[0]
    _, s, vt = np.linalg.svd(pts - origin)
    d = p.intrinsic_dim
    return origin, vt[:d]


def _reduce_to_affine_hull(p):
    """Same polytope expressed in an orthonormal frame of its affine hull (float)."""
    origin, frame = _orthonormal_affine_frame(p)
    pts = (p.vertex_array() - origin) @ frame.T
    return convex_hull([tuple(x) for x in pts], sc.FLOAT)


def solid_angle(a, b, c):
    """Solid angle of the spherical triangle with unit corners a, b, c."""
    num = abs(float(np.dot(a, np.cross(b, c))))
    den = 1.0 + float(a @ b + b @ c + c @ a)
    return 2.0 * math.atan2(num, den)


def _cyclic_order(vectors, axis):
    axis = axis / np.linalg.norm(axis)
    ref = vectors[0] - (vectors[0] @ axis) * axis
    ref /= np.linalg.norm(ref)
    other = np.cross(axis, ref)
    ang = [math.atan2(v @ other, v @ ref) for v in vectors]
    return [vectors[i] for i in np.argsort(ang)]


def external_angles(p):
    """``{dim: [(face, angle)]}`` with angles normalized to total measure 1."""
    d = p.intrinsic_dim
    out = {}
    if d == 0:
        return {0: [(frozenset([0]), 1.0)]}
    normals = [np.array([float(c) for c in f.normal]) for f in p.facets]
    normals = [v / np.linalg.norm(v) for v in normals]
    if d == 1:
        return {0: [(frozenset([0]), 0.5), (frozenset([1]), 0.5)], 1: [(frozenset([0, 1]), 1.0)]}
    if d == 2:
        verts = p.vertex_array()
        m = len(verts)
        angles = []
        for i in range(m):
            a, b, c = verts[i - 1], verts[i], verts[(i + 1) % m]
            e1, e2 = b - a, c - b
            turn = math.atan2(e1[0] * e2[1] - e1[1] * e2[0], e1 @ e2)
            angles.append((frozenset([i]), turn / (2 * math.pi)))
        out[0] = angles
        out[1] = [(frozenset([i, (i + 1) % m]), 0.5) for i in range(m)]
        return out
    if d == 3:
        facet_sets = [f.vertices for f in p.facets]
        out[2] = [(fs, 0.5) for fs in facet_sets]
        edges = []
        for e in p.faces(1):
            idx = [k for k, fs in enumerate(facet_sets) if e <= fs]
            n1, n2 = normals[idx[0]], normals[idx[1]]
            edges.append((e, math.acos(max(-1.0, min(1.0, float(n1 @ n2)))) / (2 * math.pi)))
        out[1] = edges
        verts = []
        for i in range(len(p.vertices)):
            ns = [normals[k] for k, fs in enumerate(facet_sets) if i in fs]
            axis = np.sum(ns, axis=0)
            ns = _cyclic_order(ns, axis)
            omega = sum(solid_angle(ns[0], ns[k], ns[k + 1]) for k in range(1, len(ns) - 1))
            verts.append((frozenset([i]), omega / (4 * math.pi)))
        out[0] = verts
        return out
    raise NotImplementedError("external angles are implemented up to intrinsic dimension 3")


def face_volume(p, ids):
    sub = convex_hull([p.vertices[i] for i in ids], p.mode)
    return sub.intrinsic_volume()


def intrinsic_volume(p, j):
    """``V_j(P)`` by the face/external-angle formula (ambient-independent)."""
    d = p.intrinsic_dim
    if j < 0:
        raise ValueError("j must be non-negative")
    if j > d:
        return sc.zero(p.mode)
    if j == 0:
        return sc.one(p.mode)
    if j == d:
        return p.intrinsic_volume()
    q = p if d == p.dim else _reduce_to_affine_hull(p)
    if d == 1:
        return q.intrinsic_volume()
    if j == d - 1:
        # facets carry external angle 1/2; stays rational when every facet measure is
        total = sum(face_volume(q, f.vertices) for f in q.facets)
        return total / 2 if isinstance(total, Fraction) else float(total) / 2
    angles = external_angles(q)
    total = 0.0
    for face, gamma in angles[j]:
        total += float(face_volume(q, face)) * gamma
    return total
