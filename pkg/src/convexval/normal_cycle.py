"""Normal cycles of polytopes and integration of test forms against them.

The normal cycle of a polytope P is the union over faces F of
``F x (Nor(P, F) ∩ S^{n-1})``. Each stratum is split into cells, products
of a flat face simplex and a spherical simplex, and each cell carries the
sign that makes ``(x, u) -> x + eps u`` orientation-preserving onto the
boundary of the parallel body.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import scalar as sc
from .errors import (ConvexityError, DimensionError, InvariantError, OrientationError,
                     ProvenanceError)
from .polytope import Polytope, convex_hull
from .quadrature_sphere import flat_nodes, spherical_nodes, subdivide

DEFAULT_ORDER = 20
SPHERE_AREA = {0: 2.0, 1: 2 * math.pi, 2: 4 * math.pi}


@dataclass
class Cell:
    face_simplex: tuple
    patch: tuple
    sign: int = 1


@dataclass
class Stratum:
    face: frozenset
    face_dim: int
    cells: list
    multiplicity: int = 1


@dataclass
class NormalCycle:
    dim: int
    strata: list
    source: object = None
    terms: list = field(default_factory=list)

    def __add__(self, other):
        if self.dim != other.dim:
            raise DimensionError("normal cycles live in different dimensions")
        return NormalCycle(self.dim, self.strata + other.strata, None,
                           self._terms() + other._terms())

    def __rmul__(self, k):
        k = int(k)
        strata = [Stratum(s.face, s.face_dim, s.cells, k * s.multiplicity) for s in self.strata]
        return NormalCycle(self.dim, strata, None, [(k * m, p) for m, p in self._terms()])

    def __neg__(self):
        return (-1) * self

    def __sub__(self, other):
        return self + (-other)

    def _terms(self):
        return self.terms or [(1, self.source)]

    @property
    def is_formal_sum(self):
        return self.source is None

    def quadrature(self, order=DEFAULT_ORDER):
        """Arrays ``x, u, frames, weights`` over all cells (signs and multiplicities folded in)."""
        xs, us, fs, ws = [], [], [], []
        n = self.dim
        for st in self.strata:
            for cell in st.cells:
                x, tx, wx = flat_nodes(cell.face_simplex, order)
                u, tu, wu = spherical_nodes(cell.patch, order)
                nx, nu = len(x), len(u)
                j = tx.shape[1]
                k = tu.shape[1]
                xx = np.repeat(x, nu, axis=0)
                uu = np.tile(u, (nx, 1))
                frame = np.zeros((nx * nu, j + k, 2 * n))
                if j:
                    frame[:, :j, :n] = np.repeat(tx, nu, axis=0)
                if k:
                    frame[:, j:, n:] = np.tile(tu, (nx, 1, 1))
                w = np.outer(wx, wu).ravel() * cell.sign * st.multiplicity
                xs.append(xx)
                us.append(uu)
                fs.append(frame)
                ws.append(w)
        if not xs:
            return (np.zeros((0, n)), np.zeros((0, n)), np.zeros((0, n - 1, 2 * n)), np.zeros(0))
        return np.vstack(xs), np.vstack(us), np.concatenate(fs), np.concatenate(ws)

    def to_dict(self):
        return {"dim": self.dim, "strata": [
            {"face": sorted(s.face), "face_dim": s.face_dim, "multiplicity": s.multiplicity,
             "cells": [{"face_simplex": [list(map(float, p)) for p in c.face_simplex],
                        "patch": [list(map(float, p)) for p in c.patch], "sign": c.sign}
                       for c in s.cells]} for s in self.strata]}


# -- construction -----------------------------------------------------------

def _lineality_basis(p):
    if not p.equalities:
        return np.zeros((0, p.dim))
    a = np.array([[float(c) for c in nu] for nu, _ in p.equalities])
    q, _ = np.linalg.qr(a.T)
    return q.T[: len(p.equalities)]


def normal_cone(p, face):
    """Pointed generators (orthogonal to the affine hull) and a lineality basis."""
    lin = _lineality_basis(p)
    gens = []
    for f in p.facets:
        if face <= f.vertices:
            g = np.array([float(c) for c in f.normal])
            g = g - lin.T @ (lin @ g) if len(lin) else g
            gens.append(g / np.linalg.norm(g))
    return gens, lin


def _pointed_triangulation(gens, lin):
    if not gens:
        return [()]
    g = np.array(gens)
    rank = np.linalg.matrix_rank(g, tol=1e-10)
    if rank == 1:
        return [(g[0],)]
    if rank == 2:
        basis = np.linalg.svd(g)[2][:2]
        coords = g @ basis.T
        mid = coords.sum(axis=0)
        mid /= np.linalg.norm(mid)
        perp = np.array([-mid[1], mid[0]])
        ang = np.arctan2(coords @ perp, coords @ mid)
        return [(g[int(np.argmin(ang))], g[int(np.argmax(ang))])]
    if rank == 3:
        axis = g.sum(axis=0)
        axis /= np.linalg.norm(axis)
        ref = g[0] - (g[0] @ axis) * axis
        ref /= np.linalg.norm(ref)
        other = np.cross(axis, ref)
        order = np.argsort(np.arctan2(g @ other, g @ ref))
        ring = g[order]
        return [(ring[0], ring[i], ring[i + 1]) for i in range(1, len(ring) - 1)]
    raise ValueError("normal cones of rank above 3 are not supported")


def _cone_cells(gens, lin):
    cells = []
    for pointed in _pointed_triangulation(gens, lin):
        for signs in itertools.product((1.0, -1.0), repeat=len(lin)):
            extra = tuple(s * l for s, l in zip(signs, lin))
            cells.append(tuple(pointed) + extra)
    return cells


def _face_simplices(p, ids):
    pts = [np.array([float(c) for c in p.vertices[i]]) for i in sorted(ids)]
    j = p.face_dimension(ids)
    if j == 0:
        return [(pts[0],)]
    if j == 1:
        return [(pts[0], pts[1])]
    if j == 2:
        c = np.mean(pts, axis=0)
        _, _, vt = np.linalg.svd(np.array(pts) - c)
        e1, e2 = vt[0], vt[1]
        ang = [math.atan2((q - c) @ e2, (q - c) @ e1) for q in pts]
        ring = [pts[i] for i in np.argsort(ang)]
        return [(ring[0], ring[i], ring[i + 1]) for i in range(1, len(ring) - 1)]
    raise ValueError("faces above dimension 2 are not supported")


def _cell_sign(face_simplex, patch, n):
    x, tx, _ = flat_nodes(face_simplex, 1)
    u, tu, _ = spherical_nodes(patch, 1)
    mat = np.vstack([u[0][None, :], tx[0], tu[0]])
    d = np.linalg.det(mat)
    if abs(d) < 1e-14:
        raise OrientationError("degenerate cell frame")
    return 1 if d > 0 else -1


def normal_cycle(p):
    """Stratified normal cycle of a polytope in R^1, R^2 or R^3."""
    n = p.dim
    if n > 3:
        raise DimensionError("normal cycles are implemented up to dimension 3")
    strata = []
    faces = p.faces()
    for j in sorted(faces):
        if j == n:
            continue
        for ids in faces[j]:
            gens, lin = normal_cone(p, ids)
            cells = []
            for fs in _face_simplices(p, ids):
                for cone in _cone_cells(gens, lin):
                    for patch in subdivide(cone):
                        cells.append(Cell(fs, patch, _cell_sign(fs, patch, n)))
            strata.append(Stratum(frozenset(ids), j, cells))
    return NormalCycle(n, strata, p)


def exterior_angles(p):
    """Turning angle at each vertex of a convex polygon (floats)."""
    if p.dim != 2 or p.intrinsic_dim != 2:
        raise DimensionError("exterior angles are defined here for full-dimensional polygons")
    verts = p.vertex_array()
    m = len(verts)
    out = []
    for i in range(m):
        e1 = verts[i] - verts[i - 1]
        e2 = verts[(i + 1) % m] - verts[i]
        out.append(math.atan2(e1[0] * e2[1] - e1[1] * e2[0], e1 @ e2))
    return out


def turning_number(p):
    """Exact winding count of the outer normals of a polygon (must be 1 for convex)."""
    verts = p.vertices
    m = len(verts)
    normals = []
    for i in range(m):
        a, b = verts[i], verts[(i + 1) % m]
        normals.append((b[1] - a[1], a[0] - b[0]))
    quarters = 0
    for i in range(m):
        a, b = normals[i], normals[(i + 1) % m]
        if sc.det([a, b]) <= 0:
            raise ConvexityError("normals do not turn counter-clockwise")
        quarters += (_quadrant(b) - _quadrant(a)) % 4
    if quarters % 4:
        raise InvariantError("turning count is not a whole number of turns")
    return quarters // 4


def _quadrant(v):
    x, y = v
    if x > 0 and y >= 0:
        return 0
    if x <= 0 and y > 0:
        return 1
    if x < 0 and y <= 0:
        return 2
    return 3


# -- test forms ---------------------------------------------------------------

@dataclass
class TestForm:
    """Degree n-1 form on R^n x S^{n-1}, evaluated on arrays of nodes and frames."""

    dim: int
    func: object
    tag: str = "custom"
    # (subsets, exponents, coefficients) when the form is sum_I p_I dz_I with monomial p_I
    linear: tuple = None

    __test__ = False

    def __call__(self, x, u, frames):
        return self.func(np.atleast_2d(x), np.atleast_2d(u), frames)


def _det_rows(u, vectors):
    mat = np.concatenate([u[:, None, :], vectors], axis=1)
    return np.linalg.det(mat)


def gauss_form(n):
    """Spherical volume form on the normal part; integrates to the sphere area."""
    return TestForm(n, lambda x, u, f: _det_rows(u, f[:, :, n:]), "gauss")


def edge_length_form(n):
    """``det(u, frame_x)``: length of edges (n=2) or area of facets (n=3)."""
    return TestForm(n, lambda x, u, f: _det_rows(u, f[:, :, :n]), "edge-length")


def lipschitz_killing_form(n, j):
    """Form whose integral over the normal cycle of a convex body is ``V_j``."""
    k = n - 1 - j
    if k < 0:
        raise ValueError("j must be at most n-1")

    def func(x, u, f):
        m = f.shape[1]
        total = np.zeros(len(u))
        for subset in itertools.combinations(range(m), k):
            vecs = f[:, :, :n].copy()
            for s in subset:
                vecs[:, s, :] = f[:, s, n:]
            total += _det_rows(u, vecs)
        return total / SPHERE_AREA[k]

    return TestForm(n, func, f"lk{j}")


def v1_form(n=2):
    return TestForm(n, lipschitz_killing_form(n, 1).func, "v1-form")


PRESETS = {"gauss": gauss_form, "edge-length": edge_length_form, "v1-form": v1_form}


def preset_form(name, n):
    if name.startswith("lk"):
        return lipschitz_killing_form(n, int(name[2:]))
    return PRESETS[name](n)


def random_polynomial_form(n, rng, degree=2):
    """Random form ``sum_I p_I(x, u) dz_I`` with polynomial coefficients of given degree."""
    subsets = list(itertools.combinations(range(2 * n), n - 1))
    exps = [e for e in itertools.product(range(degree + 1), repeat=2 * n) if sum(e) <= degree]
    coeffs = rng.uniform(-1, 1, size=(len(subsets), len(exps)))
    exps_arr = np.array(exps)

    def func(x, u, f):
        z = np.hstack([x, u])
        mono = np.prod(z[:, None, :] ** exps_arr[None, :, :], axis=2)
        vals = mono @ coeffs.T
        total = np.zeros(len(z))
        for k, subset in enumerate(subsets):
            sub = f[:, :, list(subset)]
            d = np.linalg.det(sub) if n > 1 else np.ones(len(z))
            total += vals[:, k] * d
        return total

    return TestForm(n, func, "random-polynomial", (tuple(subsets), exps_arr, coeffs))


def form_bank(n, count, seed=0, degree=2):
    rng = np.random.default_rng(seed)
    return [random_polynomial_form(n, rng, degree) for _ in range(count)]


def check_alternating(form, rng=None, trials=5):
    """Spot-check multilinearity and antisymmetry in the frame argument."""
    rng = np.random.default_rng(0) if rng is None else rng
    n = form.dim
    worst = 0.0
    for _ in range(trials):
        x = rng.normal(size=(1, n))
        u = rng.normal(size=(1, n))
        u /= np.linalg.norm(u)
        f = rng.normal(size=(1, n - 1, 2 * n))
        g = rng.normal(size=(1, n - 1, 2 * n))
        base = form(x, u, f)[0]
        if n - 1 >= 2:
            sw = f.copy()
            sw[:, [0, 1]] = sw[:, [1, 0]]
            worst = max(worst, abs(form(x, u, sw)[0] + base))
        lin = f.copy()
        lin[:, 0] = 2 * f[:, 0] + 3 * g[:, 0]
        fg = f.copy()
        fg[:, 0] = g[:, 0]
        worst = max(worst, abs(form(x, u, lin)[0] - 2 * base - 3 * form(x, u, fg)[0]))
    return worst


# -- integration ------------------------------------------------------------

def integrate_form(cycle, form, order=DEFAULT_ORDER):
    if form.dim != cycle.dim:
        raise DimensionError("form and cycle dimensions differ")
    x, u, f, w = cycle.quadrature(order)
    if not len(w):
        return 0.0
    return float(np.dot(w, form(x, u, f)))


def integrate_forms(cycle, forms, order=DEFAULT_ORDER):
    x, u, f, w = cycle.quadrature(order)
    if not len(w):
        return np.zeros(len(forms))
    out = np.zeros(len(forms))
    moments = {}
    for i, fm in enumerate(forms):
        if fm.linear is None:
            out[i] = float(np.dot(w, fm(x, u, f)))
            continue
        subsets, exps, coeffs = fm.linear
        key = (subsets, exps.tobytes())
        if key not in moments:
            moments[key] = _form_moments(x, u, f, w, subsets, exps)
        out[i] = float(np.sum(coeffs * moments[key]))
    return out


def _form_moments(x, u, f, w, subsets, exps):
    """``M[I, e] = sum_nodes w z^e det(frame[:, :, I])`` shared by all forms with these monomials."""
    z = np.hstack([x, u])
    mono = np.prod(z[:, None, :] ** exps[None, :, :], axis=2)
    n = x.shape[1]
    dets = np.stack([np.linalg.det(f[:, :, list(sub)]) if n > 1 else np.ones(len(z))
                     for sub in subsets], axis=1)
    return (dets * w[:, None]).T @ mono


def union_is_convex(a, b):
    """Exact test that ``A ∪ B`` is convex (full-dimensional case via volumes)."""
    from .polytope import intersect
    from .errors import EmptyIntersectionError

    hull = convex_hull(list(a.vertices) + list(b.vertices), a.mode)
    try:
        inter = intersect(a, b)
    except EmptyIntersectionError:
        inter = None
    if hull.is_full_dimensional and a.is_full_dimensional and b.is_full_dimensional:
        vi = inter.volume() if inter is not None and inter.is_full_dimensional else 0
        lhs = hull.volume()
        rhs = a.volume() + b.volume() - vi
        if a.mode == sc.RATIONAL:
            return lhs == rhs, hull, inter
        return abs(lhs - rhs) <= 1e-9 * max(1.0, abs(lhs)), hull, inter
    # lower-dimensional: every hull vertex and edge midpoint must lie in A or B
    probes = list(hull.vertices)
    for i, j in hull.edges():
        probes.append(tuple((s + t) / 2 for s, t in zip(hull.vertices[i], hull.vertices[j])))
    ok = all(a.contains(q) or b.contains(q) for q in probes) and inter is not None
    return ok, hull, inter


def union_additivity_check(a, b, forms=50, seed=0, order=DEFAULT_ORDER, bank=None):
    """Max residual of ``N(A) + N(B) - N(A∩B) - N(A∪B)`` over random test forms."""
    ok, hull, inter = union_is_convex(a, b)
    if not ok:
        raise ConvexityError("A ∪ B is not convex")
    bank = bank if bank is not None else form_bank(a.dim, forms, seed)
    lhs = integrate_forms(normal_cycle(a), bank, order) + integrate_forms(normal_cycle(b), bank, order)
    if inter is not None:
        lhs = lhs - integrate_forms(normal_cycle(inter), bank, order)
    rhs = integrate_forms(normal_cycle(hull), bank, order)
    return float(np.max(np.abs(lhs - rhs)))


# -- conic normal cycle -------------------------------------------------------

@dataclass
class ConicStratum:
    face: frozenset
    face_simplices: list
    cone_cells: list
    base: bool = False


@dataclass
class ConicNormalCycle:
    dim: int
    strata: list
    source: object = None

    def slice(self):
        """Radial slice at ``|v| = 1`` as a :class:`NormalCycle`."""
        out = []
        for st in self.strata:
            if st.base:
                continue
            cells = []
            for fs in st.face_simplices:
                for cone in st.cone_cells:
                    for patch in subdivide(cone):
                        cells.append(Cell(fs, patch, _cell_sign(fs, patch, self.dim)))
            out.append(Stratum(st.face, len(st.face_simplices[0]) - 1, cells))
        return NormalCycle(self.dim, out, self.source)


def gamma_conify(cycle, body):
    """Cone every normal patch of ``N(body)`` and add the base stratum ``K x {0}``."""
    if cycle.is_formal_sum or cycle.source is not body:
        raise ProvenanceError("conification needs the normal cycle of this convex polytope")
    strata = []
    for st in cycle.strata:
        gens, lin = normal_cone(body, st.face)
        fs = _face_simplices(body, st.face)
        strata.append(ConicStratum(st.face, fs, _cone_cells(gens, lin)))
    if body.is_full_dimensional:
        top = frozenset(range(len(body.vertices)))
        strata.append(ConicStratum(top, [tuple(np.array(s, float) for s in simplex)
                                         for simplex in body.triangulate()], [()], base=True))
    else:
        top = frozenset(range(len(body.vertices)))
        strata.append(ConicStratum(top, _face_simplices(body, top) if body.intrinsic_dim <= 2 else [],
                                   [()], base=True))
    return ConicNormalCycle(cycle.dim, strata, body)


def strata_signature(cycle, digits=9):
    """Canonical, hashable description of the carrier of a normal cycle."""
    items = []
    for st in cycle.strata:
        for c in st.cells:
            fs = tuple(sorted(tuple(round(float(v), digits) for v in p) for p in c.face_simplex))
            pt = tuple(sorted(tuple(round(float(v), digits) for v in q) for q in c.patch))
            items.append((fs, pt, c.sign * st.multiplicity))
    return tuple(sorted(items))


# -- lifted push-forward --------------------------------------------------------

@dataclass
class PushedCycle:
    """Quadrature data of a normal cycle transported by a diffeomorphism."""

    dim: int
    x: np.ndarray
    u: np.ndarray
    frames: np.ndarray
    weights: np.ndarray

    def quadrature(self, order=None):
        return self.x, self.u, self.frames, self.weights

    is_formal_sum = True


def lift_pushforward(cycle, chart, order=DEFAULT_ORDER, step=1e-6):
    """Apply ``(x, u) -> (g(x), normalize(Dg(x)^{-T} u))`` to the quadrature data."""
    x, u, f, w = cycle.quadrature(order)
    n = cycle.dim

    def lifted(xx, uu):
        gx = np.array([chart.forward(p) for p in xx])
        jac = np.array([chart.jacobian(p) for p in xx])
        if np.any(np.linalg.det(jac) <= 0):
            raise OrientationError("chart reverses orientation on the carrier")
        v = np.linalg.solve(np.transpose(jac, (0, 2, 1)), uu[:, :, None])[:, :, 0]
        return gx, v / np.linalg.norm(v, axis=1)[:, None]

    gx, gu = lifted(x, u)
    new_frames = np.zeros_like(f)
    for b in range(f.shape[1]):
        dx, du = f[:, b, :n], f[:, b, n:]
        px, pu = lifted(x + step * dx, u + step * du)
        mx, mu = lifted(x - step * dx, u - step * du)
        new_frames[:, b, :n] = (px - mx) / (2 * step)
        new_frames[:, b, n:] = (pu - mu) / (2 * step)
    return PushedCycle(n, gx, gu, new_frames, w)
