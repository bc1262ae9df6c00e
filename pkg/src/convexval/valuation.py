"""Valuations in generator form and their evaluation.

A :class:`GeneratorValuation` is a weighted list of terms
``(weight, density, bodies)``; its value on ``K`` is

    sum weight * d^k/dl_1...dl_k |_0  density(K + l_1 A_1 + ... + l_k A_k).

When every body is a polytope and the density is polynomial the function
of ``l`` is a polynomial, and the derivative is read off exactly from its
values on a small integer grid. Smooth bodies are replaced by inscribed
polytopes at two resolutions and Richardson-extrapolated; non-polynomial
densities fall back to extrapolated finite differences.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import factorial, prod

import numpy as np

from . import scalar as sc
from .bodies import (SupportBody, circle_directions, geodesic_grid, inscribed_polytope,
                     unit_ball_volume, ball_surrogate, default_grid)
from .density import Density, integrate_density
from .errors import (DegenerateError, DimensionError, EmptyIntersectionError,
                     ModeMismatchError, ToleranceError)
from .extract import fit_coefficients, lower_set
from .polytope import Polytope, affine_image, convex_hull, intersect, minkowski_sum

FD_STEP = 1e-2
FD_LEVELS = 3
SURROGATE_LEVELS = {2: (256, 512), 3: (3, 4)}


@dataclass(frozen=True)
class Term:
    weight: object
    density: Density
    bodies: tuple = ()

    @property
    def order(self):
        return len(self.bodies)


@dataclass
class EvalResult:
    value: object
    error: float = 0.0
    method: str = "exact"
    details: dict = field(default_factory=dict)

    def __float__(self):
        return float(self.value)


def _normalize_body(body, density, dim):
    if body.dim != dim:
        raise DimensionError(f"body of dimension {body.dim} in a dimension-{dim} valuation")
    if isinstance(body, Polytope):
        if not body.is_full_dimensional:
            raise DegenerateError("bodies in generator terms must be full-dimensional")
        origin = tuple(0 for _ in range(dim))
        inside = all(sc.dot(f.normal, origin) < f.offset for f in body.facets)
        if inside:
            return body
        if not density.is_constant:
            raise DegenerateError("body must contain the origin in its interior; translating it "
                                  "would change a valuation with non-constant density")
        c = body.centroid_of_vertices()
        return body.translate(tuple(-x for x in c))
    if isinstance(body, SupportBody):
        grid = circle_directions(64) if dim == 2 else geodesic_grid(1)
        if min(body.h(u) for u in grid) > 0:
            return body
        if not density.is_constant:
            raise DegenerateError("support body must contain the origin in its interior")
        c = np.mean([body.grad(u) for u in grid], axis=0)
        return body.translate(-c)
    raise TypeError(f"unsupported body type {type(body).__name__}")


class GeneratorValuation:
    """Finite weighted sum of generator terms on R^dim."""

    def __init__(self, dim, terms=(), name=None):
        self.dim = dim
        clean = []
        for t in terms:
            if not isinstance(t, Term):
                t = Term(*t)
            if t.density.dim != dim:
                raise DimensionError("density dimension does not match the valuation")
            if len(t.bodies) > dim:
                raise DimensionError(f"term of order {len(t.bodies)} exceeds dimension {dim}")
            bodies = tuple(_normalize_body(b, t.density, dim) for b in t.bodies)
            clean.append(Term(t.weight, t.density, bodies))
        self.terms = tuple(clean)
        self.name = name

    @classmethod
    def single(cls, dim, bodies=(), density=None, weight=1, name=None):
        density = Density.lebesgue(dim) if density is None else density
        return cls(dim, [Term(weight, density, tuple(bodies))], name=name)

    @classmethod
    def volume(cls, dim):
        return cls.single(dim, name="volume")

    @classmethod
    def zero(cls, dim):
        return cls(dim, [], name="zero")

    def __add__(self, other):
        if not isinstance(other, GeneratorValuation):
            return NotImplemented
        if other.dim != self.dim:
            raise DimensionError("cannot add valuations on different dimensions")
        return GeneratorValuation(self.dim, self.terms + other.terms)

    def __rmul__(self, c):
        return GeneratorValuation(self.dim, [Term(c * t.weight, t.density, t.bodies) for t in self.terms])

    def __neg__(self):
        return (-1) * self

    def __sub__(self, other):
        return self + (-other)

    def __call__(self, k):
        return eval_valuation(self, k)

    def homogeneity(self):
        """Degree ``n - k`` when every term has constant density and order ``k``; else ``None``."""
        degrees = {self.dim - t.order for t in self.terms if t.density.is_constant}
        if len(degrees) == 1 and all(t.density.is_constant for t in self.terms):
            return degrees.pop()
        return None

    def is_translation_invariant(self):
        return all(t.density.is_constant for t in self.terms)

    def has_smooth_bodies(self):
        return any(isinstance(b, SupportBody) for t in self.terms for b in t.bodies)

    def with_mode(self, mode):
        """Same valuation with every polytope body (and density) converted to ``mode``."""
        terms = []
        for t in self.terms:
            bodies = tuple(_convert_polytope(b, mode) for b in t.bodies)
            dens = t.density.as_float() if mode == sc.FLOAT else t.density
            w = float(t.weight) if mode == sc.FLOAT else t.weight
            terms.append(Term(w, dens, bodies))
        return GeneratorValuation(self.dim, terms, self.name)

    def __repr__(self):
        return f"GeneratorValuation(dim={self.dim}, terms={len(self.terms)}, name={self.name!r})"


def _convert_polytope(p, mode):
    if not isinstance(p, Polytope) or p.mode == mode:
        return p
    if mode == sc.FLOAT:
        return p.to_float()
    return convex_hull(p.vertices, mode)


# -- grouping and grids ---------------------------------------------------

def group_bodies(bodies):
    """Merge identical bodies into one variable: returns ``[(body, multiplicity)]``."""
    groups = []
    for b in bodies:
        for i, (g, m) in enumerate(groups):
            if g is b or (isinstance(g, Polytope) and isinstance(b, Polytope) and g == b):
                groups[i] = (g, m + 1)
                break
        else:
            groups.append((b, 1))
    return groups


def weighted_sum(base, bodies, lam):
    """Polytope ``base + sum lam_i bodies_i`` (zero coefficients skipped)."""
    out = base
    for body, l in zip(bodies, lam):
        if l == 0:
            continue
        if l != 1:
            body = _scale(body, l)
        out = minkowski_sum(out, body)
    return out


def _scale(p, c):
    return p.scale(c)


def measure(density, p, order=6):
    """``density(P)``; zero for lower-dimensional P."""
    if not p.is_full_dimensional:
        return sc.zero(p.mode) if density.is_polynomial else 0.0
    return integrate_density(p, density, order)


def _is_exact(density, polys):
    return (all(p.mode == sc.RATIONAL for p in polys) and density.is_polynomial
            and not any(isinstance(c, float) for c in density.poly.terms.values()))


def polynomial_derivative(func, mults, blocks, exact):
    """Mixed derivative at 0 of a polynomial sampled through ``func(alpha)``.

    ``mults`` are the derivative orders per variable; ``blocks`` bound the
    degree of the polynomial on groups of variables.
    """
    s = len(mults)
    exps = lower_set(s, blocks)
    target = tuple(mults)
    if target not in exps:
        return sc.zero(sc.RATIONAL if exact else sc.FLOAT), {}
    values = {a: func(a) for a in exps}
    coeffs = fit_coefficients(values, exps, exact)
    return coeffs[target] * prod(factorial(m) for m in mults), coeffs


def fd_derivative(func, mults, step=FD_STEP, levels=FD_LEVELS):
    """Mixed derivative at 0 of a smooth function on the positive orthant.

    Fits a polynomial of total degree ``|mults| + 2`` on the scaled lattice
    ``step * alpha`` and Richardson-extrapolates over halved steps.
    """
    s = len(mults)
    order = sum(mults)
    deg = order + 2
    exps = lower_set(s, [(range(s), deg)])
    target = tuple(mults)
    scale = prod(factorial(m) for m in mults)
    estimates = []
    h = step
    for _ in range(levels):
        vals = {a: float(func(tuple(h * x for x in a))) for a in exps}
        coeffs = fit_coefficients(vals, exps, exact=False, step=h)
        estimates.append(coeffs[target] * scale)
        h /= 2
    p = deg + 1 - order
    table = [estimates]
    while len(table[-1]) > 1:
        prev = table[-1]
        f = 2.0 ** p
        table.append([(f * prev[i + 1] - prev[i]) / (f - 1) for i in range(len(prev) - 1)])
        p += 1
    best = table[-1][0]
    err = abs(best - table[-2][-1]) if len(table) > 1 else abs(estimates[-1] - estimates[0])
    return best, err


# -- smooth-body surrogates -------------------------------------------------

def surrogate_directions(dim, level, k=None):
    """Direction set for inscribed polytopes, refined by ``level``.

    Facet normals of ``k`` are added so that support values in those
    directions are reproduced exactly.
    """
    if dim == 2:
        base = circle_directions(level, phase=0.5 * math.pi / level)
    else:
        base = geodesic_grid(level)
    if k is not None and k.is_full_dimensional:
        normals = np.array([[float(c) for c in f.normal] for f in k.facets])
        normals /= np.linalg.norm(normals, axis=1)[:, None]
        base = np.vstack([base, normals])
    return base


def realize_bodies(bodies, level, k=None, mode=sc.FLOAT):
    out = []
    for b in bodies:
        if isinstance(b, SupportBody):
            out.append(inscribed_polytope(b, surrogate_directions(b.dim, level, k), mode))
        else:
            out.append(_convert_polytope(b, mode))
    return out


# -- core derivative --------------------------------------------------------

def _derivative_polytopes(density, k, groups):
    """Exact or float derivative for polytope bodies."""
    bodies = [g for g, _ in groups]
    mults = [m for _, m in groups]
    polys = [k] + bodies
    modes = {p.mode for p in polys}
    if len(modes) > 1:
        raise ModeMismatchError("K and the bodies use different scalar modes")
    n = k.dim
    if not groups:
        return EvalResult(measure(density, k), 0.0, "exact")
    if density.is_polynomial:
        exact = _is_exact(density, polys)
        bound = n + density.degree()

        def func(alpha):
            return measure(density, weighted_sum(k, bodies, alpha))

        val, _ = polynomial_derivative(func, mults, [(range(len(mults)), bound)], exact)
        return EvalResult(val, 0.0, "exact" if exact else "numeric")

    def gfunc(lam):
        return measure(density, weighted_sum(k, bodies, lam))

    val, err = fd_derivative(gfunc, mults)
    return EvalResult(val, err, "numeric", {"route": "finite-difference"})


def mixed_derivative(density, k, bodies, levels=None):
    """``d^k/dl_1..dl_k |_0 density(K + sum l_i A_i)`` with an error estimate."""
    for b in bodies:
        if b.dim != k.dim:
            raise DimensionError("bodies must live in the same space as K")
    groups = group_bodies(list(bodies))
    if not any(isinstance(g, SupportBody) for g, _ in groups):
        return _derivative_polytopes(density, k, groups)
    kf = _convert_polytope(k, sc.FLOAT)
    dens = density.as_float()
    levels = levels or SURROGATE_LEVELS[k.dim]
    vals = []
    for level in levels:
        real = realize_bodies([g for g, _ in groups], level, kf)
        res = _derivative_polytopes(dens, kf, list(zip(real, [m for _, m in groups])))
        vals.append(float(res.value))
        fd_err = res.error
    coarse, fine = vals
    best = (4 * fine - coarse) / 3
    err = abs(fine - coarse) / 3 + fd_err
    return EvalResult(best, err, "numeric", {"surrogate_levels": levels, "raw": vals})


def mixed_derivative_at_zero(density, k, bodies):
    return mixed_derivative(density, k, bodies).value


def evaluate(valuation, k):
    """Value of a generator valuation on ``K`` with an accumulated error estimate."""
    if valuation.dim != k.dim:
        raise DimensionError(f"valuation on R^{valuation.dim} evaluated on a body in R^{k.dim}")
    total = 0
    err = 0.0
    method = "exact"
    for t in valuation.terms:
        res = mixed_derivative(t.density, k, t.bodies)
        total = total + t.weight * res.value
        err += abs(float(t.weight)) * res.error
        if res.method != "exact":
            method = "numeric"
    if method == "numeric" or isinstance(total, float):
        total = float(total)
    return EvalResult(total, err, method)


def eval_valuation(valuation, k):
    return evaluate(valuation, k).value


def eval_on_union(valuation, pieces):
    """Inclusion-exclusion over the convex pieces of a finite union."""
    if not pieces:
        return 0
    if len(pieces) > 6:
        raise ValueError("at most 6 pieces are supported")
    total = 0
    for r in range(1, len(pieces) + 1):
        for idx in combinations(range(len(pieces)), r):
            inter = pieces[idx[0]]
            try:
                for i in idx[1:]:
                    inter = intersect(inter, pieces[i])
            except EmptyIntersectionError:
                continue
            total += (-1) ** (r + 1) * eval_valuation(valuation, inter)
    return total


def minkowski_polynomial(density, k, bodies):
    """The polynomial ``l -> density(K + sum l_i A_i)`` on the tensor grid ``{0..D}^s``."""
    from .extract import tensor_interpolate

    if not density.is_polynomial:
        raise TypeError("minkowski_polynomial needs a polynomial density; "
                        "use mixed_derivative for general densities")
    if any(not isinstance(b, Polytope) for b in bodies):
        raise TypeError("minkowski_polynomial needs polytope bodies")
    s = len(bodies)
    deg = k.dim + density.degree()
    exact = _is_exact(density, [k, *bodies])
    import itertools

    values = {}
    for alpha in itertools.product(range(deg + 1), repeat=s):
        values[alpha] = measure(density, weighted_sum(k, bodies, alpha))
    coeffs = tensor_interpolate(values, s, deg, exact)
    coeffs = {a: c for a, c in coeffs.items() if c != 0}
    return MinkowskiPolynomial(s, coeffs)


@dataclass
class MinkowskiPolynomial:
    nvars: int
    coeffs: dict

    def __call__(self, lam):
        return sum(c * prod(l ** e for l, e in zip(lam, a)) for a, c in self.coeffs.items())

    def coefficient(self, alpha):
        return self.coeffs.get(tuple(alpha), 0)

    def degree(self):
        return max((sum(a) for a in self.coeffs), default=0)


# -- named generators --------------------------------------------------------

def default_ball_polytope(dim, mode=sc.RATIONAL):
    """Small rational polytope standing in for the unit ball in exact generators."""
    return ball_surrogate(dim, {1: 2, 2: 16, 3: 32}[dim], mode)


def euler_generator(dim, body=None, mode=sc.RATIONAL):
    """Generator of the Euler characteristic.

    With a polytope ``body`` (default: a rational ball surrogate ``D``) the
    term is ``(1/(n! vol D), Lebesgue, [D]*n)``, which equals 1 on every
    nonempty convex body exactly. Passing the smooth ``ball(1)`` gives the
    classical ``1/(n! kappa_n)`` normalization, evaluated numerically.
    """
    if body is None:
        body = default_ball_polytope(dim, mode)
    if isinstance(body, SupportBody):
        vol = unit_ball_volume(dim) if body.tag == "ball" else None
        if vol is None:
            raise ValueError("smooth Euler generator needs the unit ball")
        weight = 1.0 / (factorial(dim) * vol)
    else:
        weight = 1 / (factorial(dim) * body.volume())
    return GeneratorValuation.single(dim, [body] * dim, weight=weight, name="euler")


def intrinsic_generator(dim, j, body=None, mode=sc.RATIONAL):
    """Generator ``V_j^D = d^{n-j}/dl^{n-j} vol(K + l D) / ((n-j)! kappa_{n-j})``.

    With the unit ball this is the j-th intrinsic volume. With a polytope
    ``D`` it is the analogous mixed-volume valuation; ``kappa`` is then the
    volume of the ``(n-j)``-dimensional ball surrogate so that ``V_0^D = 1``.
    """
    if not 0 <= j <= dim:
        raise ValueError("j must be between 0 and n")
    if j == dim:
        return GeneratorValuation.volume(dim)
    if body is None:
        body = default_ball_polytope(dim, mode)
    k = dim - j
    if isinstance(body, SupportBody):
        weight = 1.0 / (factorial(k) * unit_ball_volume(k))
    elif k == dim:
        weight = 1 / (factorial(k) * body.volume())
    else:
        weight = Fraction(1, factorial(k)) / _kappa_rational(k, dim, body)
    return GeneratorValuation.single(dim, [body] * k, weight=weight, name=f"V{j}")


def _kappa_rational(k, dim, body):
    # exact stand-in for kappa_k matching the polytope ball: kappa_1 = 2 always
    if k == 1:
        return 2
    if k == 2 and dim == 3:
        return Fraction(unit_ball_volume(2)).limit_denominator(10 ** 12)
    raise ValueError("unsupported order")


def kappa(j):
    """Volume of the unit j-ball as ``(rational coefficient, power of pi)``."""
    if j % 2 == 0:
        m = j // 2
        return Fraction(1, factorial(m)), m
    m = (j - 1) // 2
    return Fraction(2 ** j * factorial(m), factorial(j)), m


def kappa_float(j):
    c, p = kappa(j)
    return float(c) * math.pi ** p


# -- diagnostics ------------------------------------------------------------

def c2_norm(body, grid=None):
    """``max(|h|, |grad h|, |spherical Hessian|)`` over the sphere."""
    if isinstance(body, Polytope):
        verts = body.vertex_array()
        return float(np.max(np.linalg.norm(verts, axis=1)))
    grid = default_grid(body.dim) if grid is None else grid
    best = 0.0
    for u in grid:
        best = max(best, abs(body.h(u)), float(np.linalg.norm(body.grad(u))),
                   float(np.abs(np.linalg.eigvalsh(body.spherical_hessian(u))).max()))
    return best


def cormink_bound_probe(density, radius, bodies, trials=50, seed=0, nverts=6):
    """Empirical ratio ``|mixed derivative| / prod ||h_A||_{C^2}`` over random K in B(0,R)."""
    rng = np.random.default_rng(seed)
    dim = bodies[0].dim
    norms = prod(c2_norm(b) for b in bodies)
    ratios = []
    for _ in range(trials):
        pts = rng.normal(size=(nverts, dim))
        pts *= (radius * rng.uniform(0, 1, size=(nverts, 1)) ** (1 / dim)
                / np.linalg.norm(pts, axis=1)[:, None])
        k = convex_hull([tuple(p) for p in pts], sc.FLOAT)
        val = float(mixed_derivative(density, k, bodies).value)
        ratios.append(abs(val) / norms)
    fitted = max(ratios) if ratios else 0.0
    return {"ratios": ratios, "fitted_C": fitted, "finite": bool(np.isfinite(fitted)),
            "product_of_norms": norms, "trials": trials, "radius": radius}
