"""Compact convex polytopes with vertex and facet data.

A :class:`Polytope` is immutable. Vertices are exactly the extreme points;
facets are supporting halfspaces ``normal . x <= offset`` in ambient
coordinates, and lower-dimensional polytopes carry the equations of their
affine hull.
"""
from __future__ import annotations

import functools
import json
import math
from collections import namedtuple
from fractions import Fraction

import numpy as np

from . import scalar as sc
from .errors import (DegenerateError, DimensionError, EmptyInputError,
                     EmptyIntersectionError, InvariantError, UnboundedError)
from .hull import hull_exact, hull_float

MAX_DIM = 6

Facet = namedtuple("Facet", "normal offset vertices")
Face = namedtuple("Face", "dim vertices")


class Polytope:
    """Use :func:`convex_hull` or the classmethods to build one."""

    def __init__(self, vertices, mode, dim, intrinsic_dim, facets, equalities,
                 boundary_simplices, extra=None):
        self.vertices = tuple(vertices)
        self.mode = mode
        self.dim = dim
        self.intrinsic_dim = intrinsic_dim
        self.facets = tuple(facets)
        self.equalities = tuple(equalities)
        self._boundary = boundary_simplices
        self._extra = extra or {}
        self._faces = None
        self.orientation = 1 if intrinsic_dim == dim else 0

    # -- construction -------------------------------------------------
    @classmethod
    def from_points(cls, points, mode=sc.RATIONAL):
        return convex_hull(points, mode)

    @classmethod
    def box(cls, lows, highs, mode=sc.RATIONAL):
        import itertools

        corners = itertools.product(*zip(lows, highs))
        return convex_hull(list(corners), mode)

    @classmethod
    def simplex(cls, n, mode=sc.RATIONAL):
        pts = [tuple(0 for _ in range(n))]
        for i in range(n):
            pts.append(tuple(1 if j == i else 0 for j in range(n)))
        return convex_hull(pts, mode)

    # -- basic queries ------------------------------------------------
    @property
    def is_full_dimensional(self):
        return self.intrinsic_dim == self.dim

    @property
    def nvertices(self):
        return len(self.vertices)

    def vertex_array(self):
        return np.array([[float(c) for c in v] for v in self.vertices], dtype=float)

    def centroid_of_vertices(self):
        k = len(self.vertices)
        return tuple(sum(v[i] for v in self.vertices) / k for i in range(self.dim))

    def __repr__(self):
        return (f"Polytope(dim={self.dim}, intrinsic_dim={self.intrinsic_dim}, "
                f"mode={self.mode!r}, nvertices={len(self.vertices)})")

    def __eq__(self, other):
        if not isinstance(other, Polytope):
            return NotImplemented
        if self.mode != other.mode or self.dim != other.dim:
            return False
        if self.mode == sc.RATIONAL:
            return set(self.vertices) == set(other.vertices)
        if len(self.vertices) != len(other.vertices):
            return False
        a, b = self.vertex_array(), other.vertex_array()
        d = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)
        return bool(np.all(d.min(axis=1) <= 1e-9) and np.all(d.min(axis=0) <= 1e-9))

    def __hash__(self):
        return hash((self.dim, self.mode, frozenset(self.vertices)))

    # -- support ------------------------------------------------------
    def support(self, u):
        u = sc.convert_vector(u, self.mode)
        return max(sc.dot(u, v) for v in self.vertices)

    def support_eval(self, u):
        """Return ``(h_P(u), Face)`` where the face is the exposed face in direction u."""
        if len(u) != self.dim:
            raise DimensionError(f"direction has length {len(u)}, expected {self.dim}")
        u = sc.convert_vector(u, self.mode)
        if all(c == 0 for c in u):
            raise ValueError("support of the zero direction is undefined")
        vals = [sc.dot(u, v) for v in self.vertices]
        best = max(vals)
        if self.mode == sc.RATIONAL:
            ids = frozenset(i for i, x in enumerate(vals) if x == best)
        else:
            tol = sc.EPS_GEOM * max(1.0, abs(best), float(np.linalg.norm(u)))
            ids = frozenset(i for i, x in enumerate(vals) if x >= best - tol)
        return best, Face(self.face_dimension(ids), ids)

    def face_dimension(self, ids):
        pts = [self.vertices[i] for i in ids]
        diffs = [sc.sub(p, pts[0]) for p in pts[1:]]
        return sc.rank(diffs, self.mode) if diffs else 0

    # -- volume -------------------------------------------------------
    def volume(self):
        """Lebesgue volume; requires a full-dimensional polytope."""
        if not self.is_full_dimensional:
            raise DegenerateError(
                f"{self.intrinsic_dim}-dimensional polytope has no {self.dim}-volume; "
                "use intrinsic_volume()")
        return self._fan_volume()

    def _fan_volume(self):
        if self.dim == 1 or "hull_volume" in self._extra:
            return self._extra["hull_volume"]
        return self.fan_volume()

    def fan_volume(self):
        """Volume summed over the boundary fan from the vertex centroid."""
        if self.dim == 1:
            return self._extra["hull_volume"]
        apex = self.centroid_of_vertices()
        total = 0
        for simplex in self._boundary:
            rows = [sc.sub(p, apex) for p in simplex]
            d = sc.det(rows) if self.mode == sc.RATIONAL else np.linalg.det(np.array(rows, dtype=float))
            total += abs(d)
        return total / math.factorial(self.dim)

    def intrinsic_volume(self):
        """``d``-dimensional volume of a ``d``-dimensional polytope.

        Exact when the result is rational, float otherwise.
        """
        d = self.intrinsic_dim
        if d == self.dim:
            return self.volume()
        if d == 0:
            return sc.one(self.mode)
        hv = self._extra["hull_volume"]
        if self.mode == sc.FLOAT:
            return float(hv)
        basis = self._extra["basis"]
        pivots = self._extra["pivots"]
        gram = sc.det([[sc.dot(a, b) for b in basis] for a in basis])
        proj = sc.det([[v[k] for k in pivots] for v in basis])
        ratio = Fraction(gram) / (proj * proj)
        num, den = math.isqrt(ratio.numerator), math.isqrt(ratio.denominator)
        if num * num == ratio.numerator and den * den == ratio.denominator:
            return hv * Fraction(num, den)
        return float(hv) * math.sqrt(ratio)

    # -- triangulation ------------------------------------------------
    def triangulate(self):
        """Full-dimensional simplices (as vertex-coordinate tuples) covering P."""
        if not self.is_full_dimensional:
            raise DegenerateError("triangulation needs a full-dimensional polytope")
        if self.dim == 1:
            lo, hi = sorted(self.vertices)
            return [(lo, hi)]
        apex = self.centroid_of_vertices()
        return [tuple(s) + (apex,) for s in self._boundary]

    # -- face lattice ---------------------------------------------------
    def faces(self, k=None):
        """Faces as frozensets of vertex indices, grouped by dimension."""
        if self._faces is None:
            self._faces = self._compute_faces()
        if k is None:
            return self._faces
        return self._faces.get(k, [])

    def _compute_faces(self):
        d = self.intrinsic_dim
        allv = frozenset(range(len(self.vertices)))
        out = {d: [allv]}
        if d == 0:
            return out
        facet_sets = [f.vertices for f in self.facets]
        out[d - 1] = list(dict.fromkeys(facet_sets))
        for k in range(d - 1, 0, -1):
            sub = {}
            for face in out[k]:
                cands = {face & fs for fs in facet_sets if not face <= fs}
                cands.discard(frozenset())
                for c in cands:
                    if not any(c < o for o in cands):
                        sub[c] = None
            out[k - 1] = list(sub)
        out[0] = [frozenset([i]) for i in range(len(self.vertices))]
        return out

    def edges(self):
        if self.intrinsic_dim == 0:
            return []
        if self.intrinsic_dim == 1:
            return [(0, 1)]
        if self.dim == 2 and self.intrinsic_dim == 2:
            m = len(self.vertices)
            return [(i, (i + 1) % m) for i in range(m)]
        return [tuple(sorted(e)) for e in self.faces(1)]

    def face_from_ids(self, ids):
        ids = frozenset(ids)
        if not ids or any(i < 0 or i >= len(self.vertices) for i in ids):
            raise KeyError(f"invalid face id {sorted(ids)}")
        for k, lst in self.faces().items():
            if ids in lst:
                return Face(k, ids)
        raise KeyError(f"vertex set {sorted(ids)} is not a face")

    def facets_containing(self, ids):
        ids = frozenset(ids)
        return [f for f in self.facets if ids <= f.vertices]

    # -- transformations ---------------------------------------------
    def translate(self, b):
        b = sc.convert_vector(b, self.mode)
        return affine_image(self, None, b)

    def scale(self, c):
        c = sc.to_scalar(c, self.mode)
        if c <= 0:
            m = [[c if i == j else 0 for j in range(self.dim)] for i in range(self.dim)]
            return affine_image(self, m, None)
        # positive dilation keeps the combinatorics; skip the hull
        extra = dict(self._extra)
        if "hull_volume" in extra:
            extra["hull_volume"] = extra["hull_volume"] * c ** self.intrinsic_dim
        if "basis" in extra:
            extra["basis"] = [tuple(c * x for x in v) for v in extra["basis"]]
        return Polytope([tuple(c * x for x in v) for v in self.vertices], self.mode, self.dim,
                        self.intrinsic_dim,
                        [f._replace(offset=c * f.offset) for f in self.facets],
                        [(nu, c * b) for nu, b in self.equalities],
                        [tuple(tuple(c * x for x in q) for q in s) for s in self._boundary],
                        extra)

    def contains(self, x, tol=None):
        x = sc.convert_vector(x, self.mode)
        if self.mode == sc.RATIONAL:
            ok = all(sc.dot(f.normal, x) <= f.offset for f in self.facets)
            return ok and all(sc.dot(a, x) == b for a, b in self.equalities)
        tol = sc.EPS_GEOM if tol is None else tol
        ok = all(sc.dot(f.normal, x) <= f.offset + tol for f in self.facets)
        return ok and all(abs(sc.dot(a, x) - b) <= tol for a, b in self.equalities)

    # -- exchange format --------------------------------------------------
    def to_dict(self):
        return {"dim": self.dim, "mode": self.mode,
                "vertices": [[sc.format_scalar(c) for c in v] for v in self.vertices]}

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data):
        mode = sc.check_mode(data.get("mode", sc.RATIONAL))
        pts = [tuple(sc.parse_scalar(c, mode) for c in v) for v in data["vertices"]]
        if "dim" in data and any(len(p) != data["dim"] for p in pts):
            raise DimensionError("vertex length disagrees with declared dim")
        return convex_hull(pts, mode)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def halfspaces(self):
        """Irredundant H-representation: facets plus both sides of each equality."""
        hs = [(f.normal, f.offset) for f in self.facets]
        for a, b in self.equalities:
            hs.append((a, b))
            hs.append((tuple(-c for c in a), -b))
        return hs

    def to_float(self):
        return convex_hull([tuple(float(c) for c in v) for v in self.vertices], sc.FLOAT)


def _ccw_order(points):
    cx = sum(p[0] for p in points) / len(points)
    cy = sum(p[1] for p in points) / len(points)

    def half(p):
        x, y = p[0] - cx, p[1] - cy
        return 0 if (y > 0 or (y == 0 and x > 0)) else 1

    def cmp(i, j):
        p, q = points[i], points[j]
        hp, hq = half(p), half(q)
        if hp != hq:
            return hp - hq
        cross = (p[0] - cx) * (q[1] - cy) - (p[1] - cy) * (q[0] - cx)
        return -1 if cross > 0 else (1 if cross < 0 else 0)

    order = sorted(range(len(points)), key=functools.cmp_to_key(cmp))
    low = min(range(len(order)), key=lambda k: (points[order[k]][1], points[order[k]][0]))
    return order[low:] + order[:low]


def convex_hull(points, mode=sc.RATIONAL):
    """Polytope spanned by ``points`` in the given scalar mode."""
    sc.check_mode(mode)
    points = list(points)
    if not points:
        raise EmptyInputError("convex hull of no points")
    n = len(points[0])
    if any(len(p) != n for p in points):
        raise DimensionError("points have inconsistent dimensions")
    if n < 1 or n > MAX_DIM:
        raise DimensionError(f"ambient dimension {n} outside supported range 1..{MAX_DIM}")
    pts = [sc.convert_vector(p, mode) for p in points]
    pts = list(dict.fromkeys(pts))
    if mode == sc.RATIONAL:
        h = hull_exact(pts)
    else:
        h = hull_float(np.array(pts, dtype=float))
    d = h.dim
    ext = list(h.extreme)
    if d == 2 and n == 2:
        order = _ccw_order([pts[i] for i in ext])
        ext = [ext[i] for i in order]
    remap = {old: new for new, old in enumerate(ext)}
    verts = [pts[i] for i in ext]
    extra = {"hull_volume": h.volume}
    facets = []
    equalities = []
    if mode == sc.RATIONAL:
        pivots = getattr(h, "pivots", list(range(n)))
        for a, b, vs in h.facets:
            normal = [Fraction(0)] * n
            for k, piv in enumerate(pivots):
                normal[piv] = a[k]
            facets.append(Facet(tuple(normal), b, frozenset(remap[v] for v in vs)))
        if d < n:
            base = verts[0]
            basis = [sc.sub(v, base) for v in verts[1:]]
            chosen = []
            for v in basis:
                if sc.rank(chosen + [v]) > len(chosen):
                    chosen.append(v)
            extra["basis"] = chosen
            extra["pivots"] = sc.row_echelon_pivots(chosen) if chosen else []
            null = sc.nullspace(chosen) if chosen else [
                tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n)]
            for nu in null:
                equalities.append((nu, sc.dot(nu, base)))
    else:
        origin, frame = h.origin, h.frame
        for a, b, vs in h.facets:
            a_amb = np.asarray(a) @ frame
            nrm = np.linalg.norm(a_amb)
            facets.append(Facet(tuple(float(x) / nrm for x in a_amb),
                                float(b + a_amb @ origin) / nrm,
                                frozenset(remap[v] for v in vs)))
        if d < n:
            _, _, vt = np.linalg.svd(np.array(pts, dtype=float) - origin, full_matrices=True)
            for nu in vt[d:]:
                equalities.append((tuple(float(x) for x in nu), float(nu @ origin)))
    boundary = []
    if d == n and n >= 2:
        for simplex in h.simplices:
            boundary.append(tuple(pts[i] for i in simplex))
    return Polytope(verts, mode, n, d, facets, equalities, boundary, extra)


def _check_pair(p, q):
    sc.common_mode(p, q)
    if p.dim != q.dim:
        raise DimensionError(f"dimension mismatch: {p.dim} vs {q.dim}")


def minkowski_sum(p, q):
    """Hull of all pairwise vertex sums."""
    _check_pair(p, q)
    if p.dim == 2 and p.intrinsic_dim == 2 and q.intrinsic_dim == 2:
        return _minkowski_2d(p, q)
    pts = [sc.add(a, b) for a in p.vertices for b in q.vertices]
    return convex_hull(pts, p.mode)


def _minkowski_2d(p, q):
    """Edge merge of two counter-clockwise polygons."""

    def start(poly):
        vs = poly.vertices
        return min(range(len(vs)), key=lambda i: (vs[i][1], vs[i][0]))

    def edges(poly, s):
        vs = poly.vertices
        m = len(vs)
        return [sc.sub(vs[(s + k + 1) % m], vs[(s + k) % m]) for k in range(m)]

    sp, sq = start(p), start(q)
    ep, eq = edges(p, sp), edges(q, sq)
    cur = sc.add(p.vertices[sp], q.vertices[sq])
    pts = [cur]
    i = j = 0
    while i < len(ep) or j < len(eq):
        if i == len(ep):
            e = eq[j]
            j += 1
        elif j == len(eq):
            e = ep[i]
            i += 1
        else:
            a, b = ep[i], eq[j]
            cross = a[0] * b[1] - a[1] * b[0]
            if cross > 0:
                e = a
                i += 1
            elif cross < 0:
                e = b
                j += 1
            else:
                e = sc.add(a, b)
                i += 1
                j += 1
        cur = sc.add(cur, e)
        pts.append(cur)
    return convex_hull(pts[:-1], p.mode)


def affine_image(p, matrix, offset):
    """Hull of ``{M v + b}``; ``matrix`` or ``offset`` may be ``None``."""
    n = p.dim
    if matrix is not None:
        if len(matrix) != n or any(len(r) != n for r in matrix):
            raise DimensionError("matrix must be n x n")
        matrix = [sc.convert_vector(r, p.mode) for r in matrix]
    if offset is not None:
        if len(offset) != n:
            raise DimensionError("offset must have length n")
        offset = sc.convert_vector(offset, p.mode)
    out = []
    for v in p.vertices:
        w = v if matrix is None else tuple(sc.dot(r, v) for r in matrix)
        if offset is not None:
            w = sc.add(w, offset)
        out.append(w)
    return convex_hull(out, p.mode)


def clip(p, normal, offset):
    """``P ∩ {normal . x <= offset}``; raises EmptyIntersectionError when empty."""
    normal = sc.convert_vector(normal, p.mode)
    offset = sc.to_scalar(offset, p.mode)
    vals = [sc.dot(normal, v) - offset for v in p.vertices]
    exact = p.mode == sc.RATIONAL
    tol = 0 if exact else sc.EPS_GEOM * max(1.0, max(abs(x) for x in vals))
    if all(x <= tol for x in vals):
        return p
    keep = [v for v, x in zip(p.vertices, vals) if x <= tol]
    for i, j in p.edges():
        a, b = vals[i], vals[j]
        if (a < -tol and b > tol) or (a > tol and b < -tol):
            t = a / (a - b)
            u, w = p.vertices[i], p.vertices[j]
            keep.append(tuple(ui + t * (wi - ui) for ui, wi in zip(u, w)))
    if not keep:
        raise EmptyIntersectionError("halfspace misses the polytope")
    return convex_hull(keep, p.mode)


def intersect(p, q):
    """Intersection of two polytopes (possibly lower-dimensional)."""
    _check_pair(p, q)
    out = p
    for a, b in q.halfspaces():
        out = clip(out, a, b)
    return out


def halfspace_intersection(halfspaces, hint=None, mode=sc.RATIONAL):
    """Vertex enumeration of ``{x : a . x <= b}`` by a dual hull around an interior point."""
    sc.check_mode(mode)
    hs = [(sc.convert_vector(a, mode), sc.to_scalar(b, mode)) for a, b in halfspaces]
    if not hs:
        raise UnboundedError("no halfspaces given")
    n = len(hs[0][0])
    if any(len(a) != n for a, _ in hs):
        raise DimensionError("halfspace normals have inconsistent lengths")
    center = None
    if hint is not None:
        center = sc.convert_vector(hint, mode)
        if any(sc.dot(a, center) >= b for a, b in hs):
            center = None
    if center is None:
        center = _chebyshev_center(hs, n, mode)
    slack = [b - sc.dot(a, center) for a, b in hs]
    dual_pts = [tuple(c / s for c in a) for (a, _), s in zip(hs, slack)]
    dual = convex_hull(dual_pts + [tuple(0 for _ in range(n))], mode)
    if not dual.is_full_dimensional:
        raise UnboundedError("halfspaces do not bound a compact set")
    verts = []
    for f in dual.facets:
        tol = 0 if mode == sc.RATIONAL else sc.EPS_GEOM
        if f.offset <= tol:
            raise UnboundedError("halfspaces do not bound a compact set")
        verts.append(tuple(c + a / f.offset for c, a in zip(center, f.normal)))
    return convex_hull(verts, mode)


def _chebyshev_center(hs, n, mode):
    from scipy.optimize import linprog

    a = np.array([[float(c) for c in ai] for ai, _ in hs])
    b = np.array([float(bi) for _, bi in hs])
    norms = np.linalg.norm(a, axis=1)
    cost = np.zeros(n + 1)
    cost[-1] = -1.0
    a_ub = np.hstack([a, norms[:, None]])
    bounds = [(None, None)] * n + [(0, 1e6)]
    res = linprog(cost, A_ub=a_ub, b_ub=b, bounds=bounds, method="highs")
    if res.status == 2:
        raise EmptyIntersectionError("halfspaces have empty intersection")
    if res.status == 3:
        raise UnboundedError("halfspaces do not bound a compact set")
    if res.status != 0:
        raise InvariantError(f"linear program failed: {res.message}")
    radius = res.x[-1]
    if radius >= 1e6 * (1 - 1e-9):
        raise UnboundedError("halfspaces do not bound a compact set")
    if radius <= 1e-12:
        # feasible but with empty interior: empty if strict, otherwise lower-dimensional
        raise DegenerateError("intersection is not full-dimensional")
    x = res.x[:n]
    if mode == sc.FLOAT:
        return tuple(float(c) for c in x)
    for den in (10 ** 6, 10 ** 9, 10 ** 12):
        cand = tuple(Fraction(float(c)).limit_denominator(den) for c in x)
        if all(sc.dot(ai, cand) < bi for ai, bi in hs):
            return cand
    raise InvariantError("could not snap interior point to rationals")


def diagonal_embed(k, bodies):
    """``Δ_m(K) + (A_1 × … × A_m)`` in R^{mn} as the hull of vertex tuples."""
    import itertools

    m = len(bodies)
    if m == 0:
        raise ValueError("need at least one body")
    for b in bodies:
        _check_pair(k, b)
    if m * k.dim > MAX_DIM:
        raise DimensionError(f"m*n = {m * k.dim} exceeds the supported {MAX_DIM}")
    pts = []
    for kv in k.vertices:
        for combo in itertools.product(*(b.vertices for b in bodies)):
            pts.append(tuple(c for a in combo for c in sc.add(kv, a)))
    return convex_hull(pts, k.mode)


def product_polytope(bodies):
    """Cartesian product ``A_1 × … × A_m``."""
    import itertools

    pts = [tuple(c for v in combo for c in v) for combo in itertools.product(*(b.vertices for b in bodies))]
    return convex_hull(pts, sc.common_mode(*bodies))


def face_cones(p, face):
    """Generators of the tangent cone and the normal cone of ``P`` at a face.

    ``face`` is a :class:`Face` or a vertex-index set. The tangent cone is
    returned as the generators ``v - c`` (``c`` the face centroid) of
    ``cone(P - c)``; the normal cone is generated by the outer normals of the
    facets containing the face together with both signs of every affine-hull
    equation.
    """
    ids = face.vertices if isinstance(face, Face) else frozenset(face)
    p.face_from_ids(ids)
    k = len(ids)
    c = tuple(sum(p.vertices[i][j] for i in ids) / k for j in range(p.dim))
    tangent = [sc.sub(v, c) for v in p.vertices]
    tangent = [t for t in tangent if any(x != 0 for x in t)]
    normal = [f.normal for f in p.facets if ids <= f.vertices]
    for a, _ in p.equalities:
        normal.append(a)
        normal.append(tuple(-x for x in a))
    return tangent, normal
