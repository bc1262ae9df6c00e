"""Convex hulls in arbitrary dimension.

Rational mode runs an exact incremental quickhull on homogeneous integer
coordinates, so every orientation test is a sign of an integer determinant.
Float mode delegates to Qhull through scipy.

Both return a :class:`HullResult` in the coordinates of the affine hull of
the input, with facets merged (one entry per geometric facet).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial, gcd, lcm

import numpy as np

from .errors import DegenerateError, EmptyInputError
from .scalar import EPS_GEOM, RATIONAL, cofactor_normal, det, row_echelon_pivots


@dataclass
class HullResult:
    """Hull of a point set inside its affine hull.

    ``dim`` is the intrinsic dimension. ``extreme`` indexes the input points
    that are vertices. ``facets`` lists ``(normal, offset, vertex_ids)`` in
    the reduced coordinates with ``normal . y <= offset`` on the hull;
    ``simplices`` is a triangulation of the boundary (reduced coordinates,
    indices into the input) used for volumes.
    """

    dim: int
    extreme: list
    facets: list = field(default_factory=list)
    simplices: list = field(default_factory=list)
    interior: tuple = ()
    volume: object = 0


def _homogenize(p):
    w = 1
    for c in p:
        w = lcm(w, c.denominator)
    return tuple(int(c * w) for c in p), w


def _affine_basis_rational(points):
    """Indices of an affinely independent maximal subset and the pivot coordinates."""
    p0 = points[0]
    chosen = [0]
    diffs = []
    r = 0
    for i, p in enumerate(points[1:], start=1):
        cand = diffs + [tuple(a - b for a, b in zip(p, p0))]
        if len(row_echelon_pivots(cand)) > r:
            diffs = cand
            chosen.append(i)
            r += 1
            if r == len(p0):
                break
    return chosen, row_echelon_pivots(diffs) if diffs else []


def _plane(hpts):
    """Hyperplane through d homogeneous points in R^d.

    Returns integer ``(a, c)`` with ``a . X + c * w = 0`` on the points,
    reduced by the gcd.
    """
    rows = [list(x) + [w] for x, w in hpts]
    # cofactor_normal expects d vectors in R^(d+1)
    coeffs = cofactor_normal(rows)
    g = 0
    for v in coeffs:
        g = gcd(g, v)
    if g > 1:
        coeffs = tuple(v // g for v in coeffs)
    return tuple(coeffs[:-1]), coeffs[-1]


def _side(plane, hp):
    a, c = plane
    x, w = hp
    return sum(ai * xi for ai, xi in zip(a, x)) + c * w


class _ExactQuickhull:
    def __init__(self, hpts, fpts, init):
        self.h = hpts
        self.f = fpts
        self.d = len(hpts[0][0])
        d = self.d
        # interior point: barycenter of the initial simplex, in homogeneous form
        cx = [Fraction(0)] * d
        for i in init:
            x, w = hpts[i]
            for k in range(d):
                cx[k] += Fraction(x[k], w)
        cx = [c / (d + 1) for c in cx]
        self.center = _homogenize(cx)
        self.facets = {}
        self.ridges = {}
        self.next_id = 0
        for skip in range(d + 1):
            verts = tuple(init[j] for j in range(d + 1) if j != skip)
            self._add_facet(verts)
        rest = [i for i in range(len(hpts)) if i not in set(init)]
        self._assign(rest, list(self.facets))

    def _add_facet(self, verts):
        a, c = _plane([self.h[v] for v in verts])
        if _side((a, c), self.center) > 0:
            a, c = tuple(-x for x in a), -c
        fid = self.next_id
        self.next_id += 1
        fa = np.array(a, dtype=float)
        nrm = np.linalg.norm(fa) or 1.0
        self.facets[fid] = {"verts": verts, "plane": (a, c), "out": [],
                            "fa": fa / nrm, "fc": c / nrm}
        for j in range(len(verts)):
            key = frozenset(verts[:j] + verts[j + 1:])
            self.ridges.setdefault(key, []).append(fid)
        return fid

    def _remove_facet(self, fid):
        verts = self.facets.pop(fid)["verts"]
        for j in range(len(verts)):
            key = frozenset(verts[:j] + verts[j + 1:])
            lst = self.ridges[key]
            lst.remove(fid)
            if not lst:
                del self.ridges[key]

    def _assign(self, pts, fids):
        for p in pts:
            for fid in fids:
                fc = self.facets[fid]
                if _side(fc["plane"], self.h[p]) > 0:
                    fc["out"].append(p)
                    break

    def _neighbors(self, fid):
        verts = self.facets[fid]["verts"]
        for j in range(len(verts)):
            key = frozenset(verts[:j] + verts[j + 1:])
            for g in self.ridges.get(key, ()):
                if g != fid:
                    yield key, g

    def run(self):
        pending = [fid for fid, f in self.facets.items() if f["out"]]
        while pending:
            fid = pending.pop()
            if fid not in self.facets or not self.facets[fid]["out"]:
                continue
            fc = self.facets[fid]
            dist = [fc["fa"] @ self.f[p] + fc["fc"] for p in fc["out"]]
            apex = fc["out"][int(np.argmax(dist))]
            hp = self.h[apex]
            visible = {fid}
            stack = [fid]
            horizon = []
            while stack:
                cur = stack.pop()
                for key, nb in self._neighbors(cur):
                    if nb in visible:
                        continue
                    if _side(self.facets[nb]["plane"], hp) > 0:
                        visible.add(nb)
                        stack.append(nb)
                    else:
                        horizon.append(key)
            orphans = []
            for v in visible:
                orphans.extend(p for p in self.facets[v]["out"] if p != apex)
            for v in visible:
                self._remove_facet(v)
            new = [self._add_facet(tuple(sorted(key)) + (apex,)) for key in horizon]
            self._assign(orphans, new)
            pending.extend(f for f in new if self.facets[f]["out"])
        return self


def _merge_exact(qh, hpts):
    groups = {}
    for f in qh.facets.values():
        groups.setdefault(f["plane"], []).append(f["verts"])
    return groups


def _extreme_from_groups(groups, d, mode):
    incident = {}
    for plane, simplices in groups.items():
        vs = set()
        for s in simplices:
            vs.update(s)
        for v in vs:
            incident.setdefault(v, []).append(plane)
    extreme = []
    for v, planes in incident.items():
        normals = [p[0] for p in planes]
        if mode == RATIONAL:
            r = len(row_echelon_pivots(normals))
        else:
            r = np.linalg.matrix_rank(np.asarray(normals, dtype=float), tol=1e-9)
        if r == d:
            extreme.append(v)
    return sorted(extreme)


def hull_exact(points):
    """Exact hull of rational points (tuples of Fraction)."""
    if not points:
        raise EmptyInputError("hull of an empty point set")
    n = len(points[0])
    basis, pivots = _affine_basis_rational(points)
    d = len(basis) - 1
    if d == 0:
        res = HullResult(dim=0, extreme=[0], interior=(), volume=Fraction(1))
        res.pivots, res.ambient = [], n
        return res
    reduced = [tuple(p[k] for k in pivots) for p in points]
    if d == 1:
        lo = min(range(len(reduced)), key=lambda i: reduced[i][0])
        hi = max(range(len(reduced)), key=lambda i: reduced[i][0])
        facets = [((Fraction(-1),), -reduced[lo][0], frozenset([lo])),
                  ((Fraction(1),), reduced[hi][0], frozenset([hi]))]
        res = HullResult(dim=1, extreme=sorted({lo, hi}), facets=facets,
                         simplices=[(lo,), (hi,)],
                         interior=((reduced[lo][0] + reduced[hi][0]) / 2,),
                         volume=reduced[hi][0] - reduced[lo][0])
        res.pivots, res.ambient = pivots, n
        return res
    hpts = [_homogenize(p) for p in reduced]
    fpts = np.array([[float(c) for c in p] for p in reduced])
    qh = _ExactQuickhull(hpts, fpts, basis).run()
    groups = _merge_exact(qh, hpts)
    extreme = _extreme_from_groups(groups, d, RATIONAL)
    ext_set = set(extreme)
    facets = []
    for (a, c), simplices in groups.items():
        vs = set()
        for s in simplices:
            vs.update(s)
        normal = tuple(Fraction(x) for x in a)
        facets.append((normal, Fraction(-c), frozenset(vs & ext_set)))
    cx, cw = qh.center
    center = tuple(Fraction(x, cw) for x in cx)
    vol = Fraction(0)
    for f in qh.facets.values():
        rows = [list(hpts[v][0]) + [hpts[v][1]] for v in f["verts"]]
        rows.append(list(cx) + [cw])
        den = cw
        for v in f["verts"]:
            den *= hpts[v][1]
        vol += Fraction(abs(det(rows)), den)
    vol /= factorial(d)
    simplices = [f["verts"] for f in qh.facets.values()]
    res = HullResult(dim=d, extreme=extreme, facets=facets, simplices=simplices,
                     interior=center, volume=vol)
    res.pivots = pivots
    res.ambient = n
    return res


def qhull(points):
    """Qhull with a retry allowing wide merges; highly coplanar Minkowski sums trip the default."""
    from scipy.spatial import ConvexHull, QhullError

    try:
        return ConvexHull(points)
    except QhullError:
        return ConvexHull(points, qhull_options="Q12")


def qhull_volume(points, rtol=1e-9):
    """Volume of the hull of full-dimensional ``points``.

    When default Qhull fails on a nearly degenerate input, two runs with
    wide merges allowed on differently rotated copies must agree to
    ``rtol``; otherwise DegenerateError is raised instead of returning an
    unreliable value.
    """
    from scipy.spatial import ConvexHull, QhullError

    pts = np.asarray(points, dtype=float)
    try:
        return float(ConvexHull(pts).volume)
    except QhullError:
        pass
    centered = pts - pts.mean(axis=0)
    vols = []
    for seed in (1, 2):
        q, _ = np.linalg.qr(np.random.default_rng(seed).normal(size=(pts.shape[1],) * 2))
        try:
            vols.append(float(ConvexHull(centered @ q.T, qhull_options="Q12").volume))
        except QhullError as exc:
            first = str(exc).strip().splitlines()[0]
            raise DegenerateError(f"Qhull failed on a nearly degenerate input: {first}") from None
    if abs(vols[0] - vols[1]) > rtol * max(abs(vols[0]), abs(vols[1])):
        raise DegenerateError("float hull volume is unstable on this input "
                              f"({vols[0]!r} vs {vols[1]!r})")
    return 0.5 * (vols[0] + vols[1])


def hull_float(points, tol=EPS_GEOM):
    """Float hull via Qhull, with coplanar simplicial facets merged."""
    from scipy.spatial import ConvexHull

    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        raise EmptyInputError("hull of an empty point set")
    n = pts.shape[1]
    origin = pts[0]
    diffs = pts - origin
    scale = max(1.0, float(np.abs(diffs).max()) if diffs.size else 1.0)
    _, s, vt = np.linalg.svd(diffs, full_matrices=True)
    d = int(np.sum(s > tol * scale))
    frame = vt[:d]
    if d == 0:
        return _attach(HullResult(dim=0, extreme=[0], volume=1.0), origin, frame, n)
    reduced = diffs @ frame.T
    if d == 1:
        lo, hi = int(np.argmin(reduced[:, 0])), int(np.argmax(reduced[:, 0]))
        facets = [((-1.0,), -reduced[lo, 0], frozenset([lo])),
                  ((1.0,), reduced[hi, 0], frozenset([hi]))]
        res = HullResult(dim=1, extreme=sorted({lo, hi}), facets=facets,
                         simplices=[(lo,), (hi,)],
                         interior=(0.5 * (reduced[lo, 0] + reduced[hi, 0]),),
                         volume=float(reduced[hi, 0] - reduced[lo, 0]))
        return _attach(res, origin, frame, n)
    qh = qhull(reduced)
    eqs = qh.equations
    nf = len(eqs)
    parent = list(range(nf))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    # coplanar simplicial facets are adjacent in Qhull's facet graph
    for i in range(nf):
        for j in qh.neighbors[i]:
            if j > i and np.abs(eqs[i] - eqs[j]).max() <= tol * scale:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[rj] = ri
    groups = {}
    for i in range(nf):
        groups.setdefault(find(i), []).append(tuple(int(v) for v in qh.simplices[i]))
    planes = {(tuple(eqs[k][:-1]), float(eqs[k][-1])): groups[k] for k in groups}
    extreme = _extreme_from_groups(planes, d, "float")
    ext_set = set(extreme)
    facets = []
    for k, simplices in groups.items():
        vs = set()
        for s_ in simplices:
            vs.update(s_)
        facets.append((tuple(eqs[k][:-1]), float(-eqs[k][-1]), frozenset(vs & ext_set)))
    interior = tuple(reduced[qh.vertices].mean(axis=0))
    res = HullResult(dim=d, extreme=extreme, facets=facets,
                     simplices=[tuple(int(v) for v in s_) for s_ in qh.simplices],
                     interior=interior, volume=float(qh.volume))
    return _attach(res, origin, frame, n)


def _attach(res, origin, frame, n):
    res.origin = origin
    res.frame = frame
    res.ambient = n
    return res
