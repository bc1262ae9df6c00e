"""Tube maps, tube integrals and the polytope tube formula.

For a support function ``h`` the tube map sends ``(p, u, t)`` on
``N(K) x (0, 1]`` to ``p + t grad h(u)``; it sweeps ``(K + A) \\ K``.
Integrating a density pulled back through it gives a second, independent
route to ``mu(K + sum l_i A_i)`` and hence to generator valuations.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from math import factorial

import numpy as np

from . import scalar as sc
from .bodies import SupportBody, curvature_range
from .errors import DegenerateError, DimensionError, ToleranceError
from .normal_cycle import normal_cycle
from .polytope import Polytope
from .quadrature import gauss_legendre
from .quadrature_sphere import flat_nodes, spherical_nodes
from .valuation import EvalResult, fd_derivative, group_bodies, polynomial_derivative

SPHERE_ORDER = 16
FACE_ORDER = 8
INJECTIVITY_ETA = 1e-2
INJECTIVITY_ETA_IMAGE = 1e-3


def tube_map(body, p, u, t):
    """``p + t * grad h(u)``."""
    return np.asarray(p, dtype=float) + t * np.asarray(body.grad(np.asarray(u, dtype=float)))


# -- exact tube formula -----------------------------------------------------------

def _argmax_ids(p, u, varr=None):
    """Exact exposed face; a float pass narrows the candidates first."""
    varr = p.vertex_array() if varr is None else varr
    fv = varr @ np.array([float(c) for c in u])
    tol = 1e-9 * (np.abs(fv).max() + 1.0)
    cand = np.nonzero(fv >= fv.max() - tol)[0]
    vals = {int(i): sc.dot(p.vertices[i], u) for i in cand}
    top = max(vals.values())
    return frozenset(i for i, v in vals.items() if v == top)


def _simplex_pieces(p, ids):
    """Triangulation of the face ``ids`` into simplices given as vertex tuples."""
    pts = [p.vertices[i] for i in sorted(ids)]
    if len(pts) <= 2:
        return [tuple(pts)]
    # planar convex polygon in R^3: order around the centroid using float angles
    c = np.mean([[float(x) for x in q] for q in pts], axis=0)
    arr = np.array([[float(x) for x in q] for q in pts]) - c
    _, _, vt = np.linalg.svd(arr)
    ang = np.arctan2(arr @ vt[1], arr @ vt[0])
    ring = [pts[i] for i in np.argsort(ang)]
    return [(ring[0], ring[i], ring[i + 1]) for i in range(1, len(ring) - 1)]


def _candidate_normals(p, d):
    """Facet normals of ``P + D``: facets of either summand and edge cross products."""
    cands = [f.normal for f in p.facets] + [f.normal for f in d.facets]
    if p.dim == 3:
        pe = [(p.vertices[i], p.vertices[j]) for i, j in p.edges()]
        de = [(d.vertices[i], d.vertices[j]) for i, j in d.edges()]
        pa = np.array([[float(b[k] - a[k]) for k in range(3)] for a, b in pe])
        da = np.array([[float(b[k] - a[k]) for k in range(3)] for a, b in de])
        pv = p.vertex_array()
        dv = d.vertex_array()
        pidx, didx = p.edges(), d.edges()
        for i, (a, b) in enumerate(pe):
            cr = np.cross(pa[i][None, :], da)
            scale = np.linalg.norm(pa[i]) * np.linalg.norm(da, axis=1)
            for j in np.nonzero(np.linalg.norm(cr, axis=1) > 1e-12 * scale)[0]:
                for s in (1, -1):
                    # float prefilter: both edges must be (nearly) maximal in direction w
                    w = s * cr[j]
                    tol = 1e-9 * np.abs(w).sum() * (1 + np.abs(pv).max() + np.abs(dv).max())
                    if pv[pidx[i][0]] @ w < (pv @ w).max() - tol:
                        continue
                    if dv[didx[j][0]] @ w < (dv @ w).max() - tol:
                        continue
                    c, e = de[j]
                    e1 = sc.sub(b, a)
                    e2 = sc.sub(e, c)
                    cross = (e1[1] * e2[2] - e1[2] * e2[1], e1[2] * e2[0] - e1[0] * e2[2],
                             e1[0] * e2[1] - e1[1] * e2[0])
                    cands.append(tuple(s * x for x in cross))
    return cands


def tube_polynomial(p, d):
    """Coefficients ``c_k`` with ``vol(P + l D) = sum_k c_k l^k`` from face/normal-cone pairs.

    Requires ``0`` in the interior of ``D``. Each facet ``F + G`` of
    ``P + D`` contributes the prism ``F + l conv(0, G)``.
    """
    if p.dim != d.dim:
        raise DimensionError("P and D must share the ambient space")
    if p.mode != sc.RATIONAL or d.mode != sc.RATIONAL:
        raise TypeError("the tube formula is evaluated in rational mode")
    n = p.dim
    if not d.is_full_dimensional or not d.contains((0,) * n) or any(
            f.offset <= 0 for f in d.facets):
        raise DegenerateError("D must contain the origin in its interior")
    coeffs = [Fraction(0)] * (n + 1)
    coeffs[0] = p.volume() if p.is_full_dimensional else Fraction(0)
    seen = set()
    pv, dv = p.vertex_array(), d.vertex_array()
    for u in _candidate_normals(p, d):
        if all(c == 0 for c in u):
            continue
        fp, gd = _argmax_ids(p, u, pv), _argmax_ids(d, u, dv)
        key = (fp, gd)
        if key in seen:
            continue
        j, k = p.face_dimension(fp), d.face_dimension(gd)
        if j + k != n - 1:
            continue
        seen.add(key)
        for fs in _simplex_pieces(p, fp):
            fedges = [sc.sub(q, fs[0]) for q in fs[1:]]
            for gs in _simplex_pieces(d, gd):
                gedges = [tuple(c for c in q) for q in gs]
                vol = abs(sc.det(fedges + gedges)) / (factorial(j) * factorial(n - j))
                coeffs[n - j] += vol
    if coeffs[n] != d.volume():
        raise DegenerateError("tube pairs do not reproduce vol(D); face pairing is inconsistent")
    return coeffs


def steiner_residual(p, d, lam, coeffs=None):
    """``vol(P + l D)`` by hull minus the tube-formula value (exact)."""
    from .polytope import minkowski_sum

    lam = sc.to_rational(lam)
    coeffs = tube_polynomial(p, d) if coeffs is None else coeffs
    hull_vol = minkowski_sum(p, d.scale(lam)).volume()
    return hull_vol - sum(c * lam ** k for k, c in enumerate(coeffs))


# -- tube pullback integration ---------------------------------------------

def _eval_density(density, x):
    if density.is_polynomial:
        out = np.zeros(len(x))
        for e, c in density.poly.terms.items():
            out += float(c) * np.prod(x ** np.array(e), axis=1)
        return out
    return np.array([float(density(row)) for row in x])


class _CombinedSupport:
    """``sum l_i h_i`` with gradient and ambient Hessian evaluated on node arrays."""

    def __init__(self, bodies, lam):
        self.parts = [(b, float(l)) for b, l in zip(bodies, lam) if l != 0]

    def grad_hess(self, u):
        n = u.shape[1]
        g = np.zeros_like(u)
        hs = np.zeros((len(u), n, n))
        for body, l in self.parts:
            for i, row in enumerate(u):
                g[i] += l * np.asarray(body.grad(row))
                hs[i] += l * np.asarray(body.hess(row))
        return g, hs


def tube_integral(density, k, bodies, lam, cycle=None, t_order=None,
                  sphere_order=SPHERE_ORDER, face_order=FACE_ORDER):
    """``density(K + sum l_i A_i) - density(K)`` as an integral over ``N(K) x (0, 1]``."""
    n = k.dim
    cycle = cycle or normal_cycle(k)
    support = _CombinedSupport(bodies, lam)
    if not support.parts:
        return 0.0
    deg = density.degree() if density.is_polynomial else 8
    t_nodes, t_w = gauss_legendre(t_order or (n + (deg or 0)) // 2 + 2)
    sign_n = (-1) ** (n - 1)
    total = 0.0
    cache = {}
    for st in cycle.strata:
        for cell in st.cells:
            x, tx, wx = flat_nodes(cell.face_simplex, face_order)
            key = tuple(map(tuple, np.round(np.asarray(cell.patch, float), 15)))
            if key not in cache:
                u, tu, wu = spherical_nodes(cell.patch, sphere_order)
                g, hs = support.grad_hess(u)
                cache[key] = (u, tu, wu, g, hs)
            u, tu, wu, g, hs = cache[key]
            jdim = tx.shape[1]
            tx0 = tx[0] if jdim else np.zeros((0, n))
            for t, wt in zip(t_nodes, t_w):
                pts = x[:, None, :] + t * g[None, :, :]
                rows_u = t * np.einsum("nij,nkj->nki", hs, tu)  # (Nu, ku, n)
                nx, nu = len(x), len(u)
                mats = np.zeros((nx, nu, n, n))
                if jdim:
                    mats[:, :, :jdim, :] = tx0[None, None, :, :]
                mats[:, :, jdim:n - 1, :] = rows_u[None, :, :, :]
                mats[:, :, n - 1, :] = g[None, :, :]
                dets = np.linalg.det(mats) * sign_n * cell.sign
                if np.any(dets < -1e-12 * np.abs(dets).max(initial=1.0)):
                    raise ToleranceError(
                        "tube Jacobian changes sign: the scale exceeds the injectivity "
                        "threshold reach(X) * kmin(A)")
                dens = _eval_density(density, pts.reshape(-1, n)).reshape(nx, nu)
                total += st.multiplicity * wt * float(np.einsum("i,j,ij->", wx, wu, dens * dets))
    return total


def tube_pullback_eval(valuation, k, **kw):
    """Generator valuation evaluated through tube integrals over ``N(K)``."""
    if valuation.dim != k.dim:
        raise DimensionError("valuation and body dimensions differ")
    from .valuation import measure

    kf = k.to_float() if k.mode == sc.RATIONAL else k
    cycle = normal_cycle(kf)
    total = 0.0
    err = 0.0
    for term in valuation.terms:
        groups = group_bodies(list(term.bodies))
        if any(isinstance(b, Polytope) for b, _ in groups):
            raise TypeError("tube evaluation needs smooth support bodies")
        dens = term.density.as_float()
        base = float(measure(dens, kf, order=8))
        if not groups:
            total += float(term.weight) * base
            continue
        bodies = [b for b, _ in groups]
        mults = [m for _, m in groups]

        def func(lam):
            return base + tube_integral(dens, kf, bodies, lam, cycle, **kw)

        if dens.is_polynomial:
            val, _ = polynomial_derivative(func, mults, [(range(len(mults)), k.dim + dens.degree())],
                                           exact=False)
            e = 0.0
        else:
            val, e = fd_derivative(func, mults)
        total += float(term.weight) * float(val)
        err += abs(float(term.weight)) * e
    return EvalResult(total, err, "tube", {})


# -- injectivity diagnostics -------------------------------------------------

@dataclass
class InjectivityVerdict:
    verdict: str
    collisions: int
    threshold: float
    samples: int
    witness: tuple = None


def _simplex_measure(pts):
    pts = np.asarray(pts, float)
    if len(pts) == 1:
        return 1.0
    e = pts[1:] - pts[0]
    return float(np.sqrt(abs(np.linalg.det(e @ e.T)))) / math.factorial(len(e))


def _sample_normal_cycle(x, samples, rng):
    """Points ``(p, u)`` of the unit normal bundle of a polytope or a finite point set."""
    if isinstance(x, Polytope):
        cyc = normal_cycle(x.to_float() if x.mode == sc.RATIONAL else x)
        cells = [c for st in cyc.strata for c in st.cells]
        sizes = np.array([_simplex_measure(c.face_simplex) * _simplex_measure(c.patch)
                          for c in cells])
        counts = rng.multinomial(samples, sizes / sizes.sum())
        ps, us = [], []
        for c, m in zip(cells, counts):
            if not m:
                continue
            fs = np.asarray(c.face_simplex, float)
            pa = np.asarray(c.patch, float)
            ps.append(rng.dirichlet(np.ones(len(fs)), size=m) @ fs)
            v = rng.dirichlet(np.ones(len(pa)), size=m) @ pa
            us.append(v / np.linalg.norm(v, axis=1)[:, None])
        return np.vstack(ps), np.vstack(us)
    pts = np.atleast_2d(np.asarray(x, float))
    n = pts.shape[1]
    ps = pts[rng.integers(len(pts), size=samples)]
    us = rng.normal(size=(samples, n))
    us /= np.linalg.norm(us, axis=1)[:, None]
    return ps, us


def tube_injectivity_check(x, body, eps, samples=100_000, seed=0, reach=None,
                           eta=INJECTIVITY_ETA, eta_image=INJECTIVITY_ETA_IMAGE):
    """Search sampled ``(p, u, t)`` for two far-apart parameters with nearby images.

    A collision is a pair whose conic parameters ``(p, t u)`` differ by more
    than ``eta`` while the images lie within ``eps * eta_image``.
    """
    from scipy.spatial import cKDTree

    from .reach import reach_estimate_polytope_or_points

    rng = np.random.default_rng(seed)
    ps, us = _sample_normal_cycle(x, samples, rng)
    ts = rng.uniform(0, 1, size=samples)
    grads = np.array([body.grad(u) for u in us])
    img = ps + (eps * ts)[:, None] * grads
    d0 = reach if reach is not None else reach_estimate_polytope_or_points(x)
    kmin = curvature_range([body], [1.0]).kmin
    threshold = d0 * kmin
    # conic coordinates (p, t u): nearby parameters near t = 0 are not collisions
    params = np.hstack([ps, ts[:, None] * us])
    tree = cKDTree(img)
    pairs = tree.query_pairs(eps * eta_image, output_type="ndarray")
    collisions = 0
    witness = None
    if len(pairs):
        dist = np.linalg.norm(params[pairs[:, 0]] - params[pairs[:, 1]], axis=1)
        far = pairs[dist > eta]
        collisions = len(far)
        if collisions:
            witness = tuple(img[far[0, 0]])
    if collisions == 0:
        verdict = "certified-consistent"
    elif eps <= threshold:
        verdict = "implementation-bug"
    else:
        verdict = "collisions-beyond-threshold"
    return InjectivityVerdict(verdict, collisions, threshold, samples, witness)
