"""Coordinate charts, push-forwards of valuations and chart-independence checks."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import scalar as sc
from .bodies import SupportBody, SupportFunction, as_body
from .density import Density
from .errors import (ConvexityError, DegenerateError, DimensionError, EmptyIntersectionError,
                     GluingError, OrientationError)
from .polytope import Polytope, affine_image, clip, convex_hull, minkowski_sum, product_polytope
from .valuation import GeneratorValuation, Term, eval_valuation

AFFINE = "affine"
NONLINEAR = "nonlinear"
NEWTON_TOL = 1e-12
CONVEXITY_TOL = 1e-8
BASE_SAMPLES = 256
MAX_SAMPLES = 4096


class Chart:
    """Orientation-preserving diffeomorphism of (a box in) ``R^n`` with derivative data."""

    def __init__(self, dim, forward, jacobian, second_derivative, inverse=None, kind=NONLINEAR,
                 domain=None, spec=None, matrix=None, offset=None):
        self.dim = dim
        self._forward = forward
        self._jacobian = jacobian
        self._second = second_derivative
        self._inverse = inverse
        self.kind = kind
        self.domain = domain
        self.spec = spec
        self.matrix = matrix
        self.offset = offset

    # -- constructors ------------------------------------------------------
    @classmethod
    def affine(cls, matrix, offset=None, domain=None):
        """``x -> M x + b``; exact data kept for rational transport."""
        n = len(matrix)
        m_exact = [[sc.to_rational(x) for x in row] for row in matrix]
        b_exact = [sc.to_rational(x) for x in (offset if offset is not None else [0] * n)]
        if sc.det(m_exact) <= 0:
            raise OrientationError("affine chart must have positive determinant")
        mf = np.array(m_exact, dtype=float)
        bf = np.array(b_exact, dtype=float)
        minv = np.linalg.inv(mf)
        return cls(n, lambda x: mf @ np.asarray(x, float) + bf, lambda x: mf,
                   lambda x: np.zeros((n, n, n)), lambda y: minv @ (np.asarray(y, float) - bf),
                   AFFINE, domain, spec=f"affine:{json.dumps([[str(c) for c in r] for r in m_exact])},"
                                        f"{json.dumps([str(c) for c in b_exact])}",
                   matrix=m_exact, offset=b_exact)

    @classmethod
    def identity(cls, dim, domain=None):
        return cls.affine([[int(i == j) for j in range(dim)] for i in range(dim)], None, domain)

    @classmethod
    def polyshear(cls, coeffs, domain=None):
        """``(x, y) -> (x, y + p(x))`` with ``p = sum c_k x^k``; exact inverse."""
        c = np.array([float(x) for x in coeffs])
        dp = np.polynomial.polynomial.polyder(c) if len(c) > 1 else np.zeros(1)
        ddp = np.polynomial.polynomial.polyder(dp) if len(dp) > 1 else np.zeros(1)
        pv = np.polynomial.polynomial.polyval

        def fwd(x):
            return np.array([x[0], x[1] + pv(x[0], c)])

        def inv(y):
            return np.array([y[0], y[1] - pv(y[0], c)])

        def jac(x):
            return np.array([[1.0, 0.0], [pv(x[0], dp), 1.0]])

        def second(x):
            t = np.zeros((2, 2, 2))
            t[1, 0, 0] = pv(x[0], ddp)
            return t

        if len(np.trim_zeros(c, "b")) <= 2:
            c0 = sc.to_rational(coeffs[0]) if len(coeffs) else 0
            c1 = sc.to_rational(coeffs[1]) if len(coeffs) > 1 else 0
            return cls.affine([[1, 0], [c1, 1]], [0, c0], domain)
        return cls(2, fwd, jac, second, inv, NONLINEAR, domain,
                   spec="polyshear:" + ",".join(str(x) for x in coeffs))

    @classmethod
    def quadratic(cls, tensor, linear=None, domain=None):
        """``x -> L x + sum_jk T[i, j, k] x_j x_k`` (T symmetric in j, k); Newton inverse."""
        t = np.asarray(tensor, dtype=float)
        t = 0.5 * (t + np.transpose(t, (0, 2, 1)))
        n = t.shape[0]
        lin = np.eye(n) if linear is None else np.asarray(linear, float)

        def fwd(x):
            x = np.asarray(x, float)
            return lin @ x + np.einsum("ijk,j,k->i", t, x, x)

        def jac(x):
            return lin + 2 * np.einsum("ijk,k->ij", t, np.asarray(x, float))

        return cls(n, fwd, jac, lambda x: 2 * t, None, NONLINEAR, domain,
                   spec="quadratic:" + json.dumps(t.tolist()))

    @classmethod
    def parse(cls, text):
        """``affine:[[m11,m12],[m21,m22]],[b1,b2]`` or ``polyshear:c0,c1,...``."""
        kind, _, rest = text.partition(":")
        if kind == "affine":
            data = json.loads("[" + rest + "]")
            matrix = data[0]
            offset = data[1] if len(data) > 1 else None
            return cls.affine(matrix, offset)
        if kind == "polyshear":
            return cls.polyshear([sc.to_rational(x) for x in rest.split(",") if x.strip()])
        raise ValueError(f"unknown chart kind {kind!r}")

    # -- evaluation --------------------------------------------------------
    def forward(self, x):
        return self._forward(np.asarray(x, float))

    def jacobian(self, x):
        return np.asarray(self._jacobian(np.asarray(x, float)), float)

    def second_derivative(self, x):
        return np.asarray(self._second(np.asarray(x, float)), float)

    def inverse(self, y):
        y = np.asarray(y, float)
        if self._inverse is not None:
            return self._inverse(y)
        x = y.copy()
        for _ in range(50):
            r = self.forward(x) - y
            if np.abs(r).max() <= NEWTON_TOL * (1 + np.abs(y).max()):
                return x
            x = x - np.linalg.solve(self.jacobian(x), r)
        if np.abs(self.forward(x) - y).max() > 1e3 * NEWTON_TOL * (1 + np.abs(y).max()):
            raise DegenerateError("Newton inversion did not converge")
        return x

    def inverse_chart(self):
        if self.kind == AFFINE:
            minv = _rational_inverse(self.matrix)
            boff = [-sum(r[j] * self.offset[j] for j in range(self.dim)) for r in minv]
            return Chart.affine(minv, boff)
        g = self
        return Chart(self.dim, g.inverse, lambda y: np.linalg.inv(g.jacobian(g.inverse(y))),
                     lambda y: _inverse_second(g, y), g.forward, NONLINEAR)

    def compose(self, other):
        """``self ∘ other``."""
        if self.kind == AFFINE and other.kind == AFFINE:
            m = [[sum(a[k] * other.matrix[k][j] for k in range(self.dim)) for j in range(self.dim)]
                 for a in self.matrix]
            b = [sum(a[k] * other.offset[k] for k in range(self.dim)) + bi
                 for a, bi in zip(self.matrix, self.offset)]
            return Chart.affine(m, b)
        f, g = self, other

        def second(x):
            jg = g.jacobian(x)
            d2f = f.second_derivative(g.forward(x))
            return (np.einsum("iab,aj,bk->ijk", d2f, jg, jg)
                    + np.einsum("ia,ajk->ijk", f.jacobian(g.forward(x)), g.second_derivative(x)))

        return Chart(self.dim, lambda x: f.forward(g.forward(x)),
                     lambda x: f.jacobian(g.forward(x)) @ g.jacobian(x), second,
                     lambda y: g.inverse(f.inverse(y)), NONLINEAR)

    def validate(self, samples=None, seed=0):
        """Round-trip error and minimum Jacobian determinant on domain samples."""
        rng = np.random.default_rng(seed)
        lo, hi = self.domain if self.domain else ([-1.0] * self.dim, [1.0] * self.dim)
        pts = rng.uniform(lo, hi, size=(samples or 200, self.dim))
        err = max(float(np.abs(self.inverse(self.forward(p)) - p).max()) for p in pts)
        mindet = min(float(np.linalg.det(self.jacobian(p))) for p in pts)
        if mindet <= 0:
            raise OrientationError("chart is not orientation preserving on its domain")
        return err, mindet

    def __repr__(self):
        return f"Chart({self.spec or self.kind})"


def _rational_inverse(m):
    n = len(m)
    cols = [sc.solve(m, [int(i == j) for i in range(n)]) for j in range(n)]
    return [[cols[j][i] for j in range(n)] for i in range(n)]


def _inverse_second(g, y, h=1e-5):
    n = g.dim
    out = np.zeros((n, n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        jp = np.linalg.inv(g.jacobian(g.inverse(y + e)))
        jm = np.linalg.inv(g.jacobian(g.inverse(y - e)))
        out[:, :, k] = (jp - jm) / (2 * h)
    return out


# -- push-forwards -----------------------------------------------------------

def linear_image_body(body, matrix):
    """``M A`` for a polytope or support body ``A``."""
    if isinstance(body, Polytope):
        return affine_image(body, matrix, None)
    m = np.array(matrix, dtype=float)
    out = SupportFunction(body.dim, lambda u: body.h(m.T @ u), lambda u: m @ body.grad(m.T @ u),
                          lambda u: m @ body.hess(m.T @ u) @ m.T, tag="linear-image",
                          params={"base": body.tag, "matrix": m})
    return as_body(out, validate=False)


def pushforward_affine(valuation, matrix, offset=None):
    """Generator form of ``S -> psi(g^{-1} S)`` for ``g(x) = M x + b``."""
    n = valuation.dim
    m = [[sc.to_rational(x) for x in row] for row in matrix]
    b = [sc.to_rational(x) for x in (offset if offset is not None else [0] * n)]
    if sc.det(m) == 0:
        raise DegenerateError("push-forward needs an invertible matrix")
    terms = []
    for t in valuation.terms:
        dens = t.density.pushforward_affine(m, b)
        bodies = tuple(linear_image_body(a, m) for a in t.bodies)
        terms.append(Term(t.weight, dens, bodies))
    return GeneratorValuation(n, terms, name=f"pushforward({valuation.name})")


def pushforward_density(density, chart):
    """``(g_* mu)(y) = mu(g^{-1} y) / |det Dg(g^{-1} y)|`` as a general density."""
    def func(y):
        x = chart.inverse(y)
        return float(density(tuple(x))) / abs(float(np.linalg.det(chart.jacobian(x))))

    return Density.general(density.dim, func, name="pushforward")


def taylor_chart(chart, at):
    """First-order Taylor chart ``x -> g(at) + Dg(at) (x - at)``."""
    at = np.asarray(at, float)
    jac = chart.jacobian(at)
    off = chart.forward(at) - jac @ at
    return Chart.affine(jac.tolist(), off.tolist())


def transport_linearized(valuation, chart, at):
    """``g_* psi`` for affine ``g``; otherwise the push-forward under the Taylor chart at ``at``.

    The Taylor route is float-valued and its error on a body centred at
    ``at`` of size ``eps`` is second order in ``eps`` for centrally
    symmetric bodies.
    """
    if chart.kind == AFFINE:
        return pushforward_affine(valuation, chart.matrix, chart.offset)
    lin = taylor_chart(chart, at)
    return pushforward_affine(valuation.with_mode(sc.FLOAT), lin.matrix, lin.offset).with_mode(sc.FLOAT)


def _as_float(b):
    return b.to_float() if isinstance(b, Polytope) and b.mode == sc.RATIONAL else b


# -- images of convex bodies --------------------------------------------------

def boundary_sample(body, count):
    """About ``count`` ordered points on the boundary of a planar body.

    Polygons are sampled along their edges (vertices included), smooth
    bodies at the gradient points of equally spaced normals.
    """
    if isinstance(body, SupportBody):
        th = 2 * np.pi * np.arange(count) / count
        return np.array([body.grad(np.array([math.cos(a), math.sin(a)])) for a in th])
    verts = body.vertex_array()
    m = len(verts)
    lengths = np.linalg.norm(np.roll(verts, -1, axis=0) - verts, axis=1)
    per = np.maximum(1, np.round(count * lengths / lengths.sum()).astype(int))
    pts = []
    for i in range(m):
        a, b = verts[i], verts[(i + 1) % m]
        for s in np.arange(per[i]) / per[i]:
            pts.append(a + s * (b - a))
    return np.array(pts)


def convexity_defect(points):
    """Largest depth of a sample point inside the hull of the sample."""
    from scipy.spatial import ConvexHull

    hull = ConvexHull(points)
    eq = hull.equations
    return float(-(points @ eq[:, :-1].T + eq[:, -1]).max(axis=1).max())


def _mapped(body, mapping, count, tol):
    pts = np.array([mapping(x) for x in boundary_sample(body, count)])
    scale = max(1.0, float(np.ptp(pts, axis=0).max()))
    if tol is not None and convexity_defect(pts) > tol * scale:
        raise ConvexityError("image of the body is not convex")
    return pts


def image_polytope(body, mapping, count=None, tol=CONVEXITY_TOL):
    """Convex image ``mapping(body)`` realized as the hull of a boundary sample.

    With ``count`` the sample size is fixed; otherwise it doubles from
    256 until the area is stable to 1e-6 relative (at most 4096).
    """
    if body.dim != 2:
        raise DimensionError("resampled images are implemented for planar bodies")
    if count is not None:
        return convex_hull([tuple(x) for x in _mapped(body, mapping, count, tol)], sc.FLOAT)
    count = BASE_SAMPLES
    prev = None
    while True:
        hull = convex_hull([tuple(x) for x in _mapped(body, mapping, count, tol)], sc.FLOAT)
        vol = hull.volume()
        if prev is not None and abs(vol - prev) <= 1e-6 * abs(vol) or count >= MAX_SAMPLES:
            return hull
        prev = vol
        count *= 2


def is_image_convex(body, mapping, count=BASE_SAMPLES, tol=CONVEXITY_TOL):
    try:
        _mapped(body, mapping, count, tol)
    except ConvexityError:
        return False
    return True


def chart_image(chart, k, count=None):
    """``g(K)``: exact for affine charts on polytopes, a resampled hull otherwise."""
    if chart.kind == AFFINE and isinstance(k, Polytope):
        return affine_image(k, chart.matrix, chart.offset)
    return image_polytope(k, chart.forward, count)


def pushforward_eval(valuation, chart, s):
    """``(g_* psi)(S) = psi(g^{-1} S)``."""
    if chart.kind == AFFINE:
        inv = chart.inverse_chart()
        return eval_valuation(valuation, affine_image(s, inv.matrix, inv.offset))
    pre = image_polytope(s if s.mode == sc.FLOAT else s.to_float(), chart.inverse)
    return eval_valuation(valuation.with_mode(sc.FLOAT), pre)


# -- slice identity -------------------------------------------------------------

def _clip_box(p, constraints):
    for a, b in constraints:
        p = clip(p, a, b)
    return p


def _fix_coordinates(p, coords, values):
    cons = []
    dim = p.dim
    for c, v in zip(coords, values):
        e = tuple(int(i == c) for i in range(dim))
        cons += [(e, v), (tuple(-x for x in e), -v)]
    return _clip_box(p, cons)


def _project(p, coords):
    return convex_hull([tuple(v[c] for c in coords) for v in p.vertices], p.mode)


def slice_identity_check(t, a, b, x0):
    """Distance between ``(T + A x B) ∩ ({x0} x V)`` and ``{x0} x (p2(T ∩ p1^{-1}(x0 - A)) + B)``."""
    n = a.dim
    if t.dim != 2 * n or b.dim != n or len(x0) != n:
        raise DimensionError("T must live in R^{2n} with A, B in R^n")
    x0 = sc.convert_vector(x0, t.mode)
    xs, ys = list(range(n)), list(range(n, 2 * n))
    try:
        left_full = minkowski_sum(t, product_polytope([a, b]))
        left = _project(_fix_coordinates(left_full, xs, x0), ys)
    except EmptyIntersectionError:
        left = None
    try:
        region = affine_image(a, [[-int(i == j) for j in range(n)] for i in range(n)], x0)
        cons = [(tuple(f.normal) + (0,) * n, f.offset) for f in region.facets]
        for nu, off in region.equalities:
            cons += [(tuple(nu) + (0,) * n, off), (tuple(-c for c in nu) + (0,) * n, -off)]
        if region.intrinsic_dim == 0:
            cut = _fix_coordinates(t, xs, region.vertices[0])
        else:
            cut = _clip_box(t, cons)
        right = minkowski_sum(_project(cut, ys), b)
    except EmptyIntersectionError:
        right = None
    if left is None and right is None:
        return 0
    if left is None or right is None:
        return math.inf
    if set(left.vertices) == set(right.vertices):
        return 0
    return hausdorff(left, right)


def hausdorff(p, q):
    """Hausdorff distance of two polytopes, by vertex-to-polytope distances."""
    def dist(x, poly):
        from scipy.optimize import minimize

        verts = poly.vertex_array()
        if len(verts) == 1:
            return float(np.linalg.norm(x - verts[0]))
        res = minimize(lambda w: np.sum((np.exp(w) / np.exp(w).sum() @ verts - x) ** 2),
                       np.zeros(len(verts)), method="BFGS")
        return float(np.sqrt(res.fun))

    return max(max(dist(v, q) for v in p.vertex_array()), max(dist(v, p) for v in q.vertex_array()))


# -- bi-convex bodies and chart independence --------------------------------------

def place(base, eps, center):
    """``center + eps * base`` for a polytope or a support body."""
    if isinstance(base, Polytope):
        base = base.to_float() if base.mode == sc.RATIONAL else base
        return base.scale(eps).translate(tuple(float(c) for c in center))
    return (float(eps) * base).translate(np.asarray(center, float))


def biconvex_bodies(f, g, base, scales, centers=None):
    """Per center, the largest ``center + eps * base`` whose images under both charts are convex.

    Returns ``(center, eps, body)`` triples.
    """
    if centers is None:
        centers = [(x, y) for x in (-0.5, 0.0, 0.5) for y in (-0.5, 0.0, 0.5)]
    out = []
    for c in centers:
        for eps in sorted(scales, reverse=True):
            body = place(base, eps, c)
            if is_image_convex(body, f.forward) and is_image_convex(body, g.forward):
                out.append((c, eps, body))
                break
    if not out:
        raise ConvexityError("no bi-convex body found at any scale")
    return out


def chart_independence_check(phi, psi, f, g, k, count=64):
    """Relative difference of the product evaluated in two charts.

    ``phi`` and ``psi`` live in the chart ``f`` and are evaluated on
    ``f(K)``; they are transported to the chart ``g`` through ``g ∘ f^{-1}``
    and evaluated on ``g(K)``.  Non-polytope images use a shared boundary
    sample of ``count`` points.  Returns ``(residual, lhs, rhs)``.
    """
    from .product import product_eval

    h = g.compose(f.inverse_chart())
    fk = chart_image(f, k, count)
    gk = chart_image(g, k, count)
    lhs = float(product_eval(phi, psi, fk).value)
    center = np.mean(fk.vertex_array(), axis=0)
    phi_t = transport_linearized(phi, h, center)
    psi_t = transport_linearized(psi, h, center)
    if gk.mode == sc.FLOAT or h.kind != AFFINE:
        phi_t, psi_t = phi_t.with_mode(sc.FLOAT), psi_t.with_mode(sc.FLOAT)
        gk = gk.to_float() if gk.mode == sc.RATIONAL else gk
    rhs = float(product_eval(phi_t, psi_t, gk).value)
    if lhs == rhs:
        return 0.0, lhs, rhs
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs)), lhs, rhs


# -- charted valuations -------------------------------------------------------------

@dataclass
class ChartedValuation:
    atlas: list
    valuations: list
    log: list = field(default_factory=list)

    def __post_init__(self):
        if len(self.atlas) != len(self.valuations):
            raise ValueError("one valuation per chart is required")

    def evaluate(self, k, index=0):
        chart = self.atlas[index]
        return eval_valuation(self.valuations[index], chart_image(chart, k))


def _inside(domain, k):
    lo, hi = domain
    v = k.vertex_array()
    return bool(np.all(v >= np.array(lo, float)) and np.all(v <= np.array(hi, float)))


def restrict_and_glue(cv, subatlas, test_bodies=None, tolerance=1e-9, partner=None):
    """Restrict to the charts ``subatlas`` (indices) after checking overlap compatibility.

    For each pair of retained charts, test bodies inside both domains are
    evaluated in each chart; the valuations and, with ``partner``, their
    products must agree within ``tolerance``.
    """
    from .product import product_eval

    keep = list(subatlas)
    log = list(cv.log)
    bodies = test_bodies or []
    for a_i in range(len(keep)):
        for b_i in range(a_i + 1, len(keep)):
            i, j = keep[a_i], keep[b_i]
            ci, cj = cv.atlas[i], cv.atlas[j]
            for k in bodies:
                if ci.domain and not _inside(ci.domain, k):
                    continue
                if cj.domain and not _inside(cj.domain, k):
                    continue
                vi = float(eval_valuation(cv.valuations[i], chart_image(ci, k)))
                vj = float(eval_valuation(cv.valuations[j], chart_image(cj, k)))
                res = abs(vi - vj) / max(abs(vi), 1e-300)
                entry = {"charts": (i, j), "kind": "value", "residual": res}
                if partner is not None:
                    pi = float(product_eval(cv.valuations[i], partner.valuations[i],
                                            chart_image(ci, k)).value)
                    pj = float(product_eval(cv.valuations[j], partner.valuations[j],
                                            chart_image(cj, k)).value)
                    entry["product_residual"] = abs(pi - pj) / max(abs(pi), 1e-300)
                    res = max(res, entry["product_residual"])
                log.append(entry)
                if res > tolerance:
                    raise GluingError(f"charts {i} and {j} disagree on an overlap body "
                                      f"(residual {res:.3g})")
    out = ChartedValuation([cv.atlas[i] for i in keep], [cv.valuations[i] for i in keep], log)
    return out


def restrict_to_chart(cv, index):
    return cv.valuations[index]
