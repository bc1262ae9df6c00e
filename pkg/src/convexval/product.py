"""Products of generator valuations through the diagonal construction.

For terms ``(mu, A_1..A_j)`` and ``(nu, B_1..B_k)`` the product term is the
mixed derivative at 0 of

    (lam, eta) -> (mu ⊠ nu)(Δ(K) + (sum lam_i A_i) x (sum eta_i B_i))

in ``R^{2n}``. The function is a polynomial when the densities are, so the
derivative is read off exactly on an integer lattice.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import scalar as sc
from .bodies import SupportBody
from .density import Density
from .errors import DimensionError, ToleranceError
from .polytope import MAX_DIM, Polytope, convex_hull, diagonal_embed, minkowski_sum
from .valuation import (EvalResult, GeneratorValuation, Term, _convert_polytope, eval_valuation,
                        euler_generator, fd_derivative, group_bodies, intrinsic_generator,
                        measure, polynomial_derivative, realize_bodies, weighted_sum)

AUTO = "auto"
PRODUCT_SURROGATE_LEVELS = (24, 48)


def _mode_for(dim, mode):
    if mode == AUTO:
        return sc.RATIONAL if dim == 1 else sc.FLOAT
    return sc.check_mode(mode)


def _point(dim, mode):
    return convex_hull([(0,) * dim], mode)


def _combination(bodies, lam, dim, mode):
    """``sum lam_i A_i`` (the origin when every coefficient vanishes)."""
    base = _point(dim, mode)
    return weighted_sum(base, bodies, lam)


def _term_derivative(k, terms, mode, levels=None):
    """Mixed derivative of ``(⊠ densities)(Δ_m(K) + product of combinations)`` at 0."""
    n = k.dim
    m = len(terms)
    if m * n > MAX_DIM:
        raise DimensionError(f"{m}-fold product in dimension {n} exceeds R^{MAX_DIM}")
    density = terms[0].density
    for t in terms[1:]:
        density = density.tensor(t.density)
    if mode == sc.FLOAT:
        density = density.as_float()
    groups = [group_bodies(list(t.bodies)) for t in terms]
    smooth = any(isinstance(b, SupportBody) for g in groups for b, _ in g)
    if smooth:
        vals = []
        for level in levels or PRODUCT_SURROGATE_LEVELS:
            real = [list(zip(realize_bodies([b for b, _ in g], level, k.to_float() if k.mode == sc.RATIONAL else k),
                             [mu for _, mu in g])) for g in groups]
            vals.append(float(_polytope_term_derivative(k.to_float() if k.mode == sc.RATIONAL else k,
                                                        real, density, sc.FLOAT).value))
        coarse, fine = vals
        return EvalResult((4 * fine - coarse) / 3, abs(fine - coarse) / 3, "numeric",
                          {"surrogate_levels": levels or PRODUCT_SURROGATE_LEVELS})
    kk = _convert_polytope(k, mode)
    groups = [[(_convert_polytope(b, mode), mu) for b, mu in g] for g in groups]
    return _polytope_term_derivative(kk, groups, density, mode)


def _diagonal_volume_float(k, parts):
    """Volume of ``Δ_m(K) + (P_1 x ... x P_m)`` straight from Qhull (0 if flat)."""
    from itertools import product as cartesian

    from .hull import qhull_volume

    kv = k.vertex_array()
    pv = [p.vertex_array() for p in parts]
    pts = np.array([np.concatenate([x + y for y in combo])
                    for x in kv for combo in cartesian(*pv)])
    centered = pts - pts.mean(axis=0)
    scale = max(1.0, float(np.abs(centered).max()))
    if np.linalg.matrix_rank(centered, tol=sc.EPS_GEOM * scale) < pts.shape[1]:
        return 0.0
    return qhull_volume(pts)


def _polytope_term_derivative(k, groups, density, mode):
    n = k.dim
    flat_bodies = [b for g in groups for b, _ in g]
    mults = [mu for g in groups for _, mu in g]
    sizes = [len(g) for g in groups]
    starts = np.cumsum([0] + sizes)

    fast = mode == sc.FLOAT and density.is_constant

    def func(alpha):
        parts = []
        for gi, g in enumerate(groups):
            lam = alpha[starts[gi]:starts[gi + 1]]
            parts.append(_combination([b for b, _ in g], lam, n, mode))
        if fast:
            return float(density.constant_value()) * _diagonal_volume_float(k, parts)
        return measure(density, diagonal_embed(k, parts))

    if not mults:
        return EvalResult(func(()), 0.0, "exact" if mode == sc.RATIONAL else "numeric")
    if density.is_polynomial:
        bound = n + density.degree()
        blocks = [(range(starts[i], starts[i + 1]), bound) for i in range(len(groups))]
        exact = mode == sc.RATIONAL
        val, _ = polynomial_derivative(func, mults, blocks, exact)
        return EvalResult(val, 0.0, "exact" if exact else "numeric")
    val, err = fd_derivative(func, mults)
    return EvalResult(val, err, "numeric", {"route": "finite-difference"})


def _multi_eval(valuations, k, mode=AUTO):
    n = k.dim
    for v in valuations:
        if v.dim != n:
            raise DimensionError("valuations and body live in different dimensions")
    mode = _mode_for(n, mode)
    total = 0
    err = 0.0
    method = "exact"

    def rec(idx, chosen, weight):
        nonlocal total, err, method
        if idx == len(valuations):
            res = _term_derivative(k, chosen, mode)
            total = total + weight * res.value
            err += abs(float(weight)) * res.error
            if res.method != "exact":
                method = "numeric"
            return
        for t in valuations[idx].terms:
            rec(idx + 1, chosen + [t], weight * t.weight)

    rec(0, [], 1)
    if method != "exact":
        total = float(total)
    return EvalResult(total, err, method, {"mode": mode})


def product_eval(phi, psi, k, mode=AUTO):
    """``(phi · psi)(K)`` with an error estimate."""
    return _multi_eval([phi, psi], k, mode)


def triple_product_eval(phi, psi, xi, k, mode=AUTO):
    """``(phi · psi · xi)(K)`` through the triple diagonal in ``R^{3n}``."""
    return _multi_eval([phi, psi, xi], k, mode)


@dataclass
class ProductValuation:
    """Lazy ``phi · psi`` with an evaluation cache keyed by the body."""

    left: GeneratorValuation
    right: GeneratorValuation
    mode: str = AUTO
    tolerance: float = 1e-6
    cache: dict = field(default_factory=dict)

    @property
    def dim(self):
        return self.left.dim

    def evaluate(self, k):
        key = (k.mode, frozenset(k.vertices))
        if key not in self.cache:
            res = product_eval(self.left, self.right, k, self.mode)
            if res.error > self.tolerance * max(1.0, abs(float(res.value))):
                raise ToleranceError(f"product error estimate {res.error:.3g} exceeds tolerance")
            self.cache[key] = res
        return self.cache[key]

    def __call__(self, k):
        return self.evaluate(k).value


def algebra_combine(op, *inputs):
    """``add``: sum of valuations; ``scale``: ``(c, valuation)``."""
    if op == "add":
        if not inputs:
            raise ValueError("nothing to add")
        out = inputs[0]
        for v in inputs[1:]:
            out = out + v
        return out
    if op == "scale":
        c, v = inputs
        return c * v
    raise ValueError(f"unknown operation {op!r}")


# -- nested products of translation-invariant valuations ----------------------

def _homogeneous_parts(value_of, dim, probe):
    """``eta_0`` and ``eta_n`` of a translation-invariant ``eta`` from its values on a point and ``t·probe``."""
    pt = _point(dim, probe.mode)
    e0 = value_of(pt)
    vals = [value_of(probe.scale(t)) - e0 for t in (1, 2)]
    # eta(t L) - eta_0 = t eta_1(L) + t^2 eta_2 vol(L)   (n = 2);  t eta_1 vol(L) (n = 1)
    if dim == 1:
        top = vals[0] / probe.volume()
    else:
        top = (vals[1] - 2 * vals[0]) / (2 * probe.volume())
    return e0, top


def nested_product_eval(phi, psi, xi, k, mode=AUTO, probe=None):
    """``((phi · psi) · xi)(K)`` for translation-invariant ``phi, psi`` and Lebesgue-type ``xi``.

    ``eta = phi · psi`` is only known through its values. For a
    translation-invariant ``eta = eta_0 chi + eta_1 + eta_n vol`` and a body
    combination ``L``, ``int eta(K ∩ (y - L)) dy`` expands as
    ``eta_0 vol(K + L) + eta_1(K) vol(L) + vol(K) eta_1(-L) + eta_n vol(K) vol(L)``
    with ``eta_1`` Minkowski additive; ``xi``'s mixed derivative of this
    polynomial gives the nested product.
    """
    n = k.dim
    if n not in (1, 2):
        raise DimensionError("nested products are implemented for n = 1, 2")
    if not (phi.is_translation_invariant() and psi.is_translation_invariant()):
        raise ValueError("nested evaluation needs translation-invariant factors")
    mode = _mode_for(n, mode)
    cache = {}

    def eta(body):
        key = frozenset(body.vertices)
        if key not in cache:
            cache[key] = product_eval(phi, psi, body, mode).value
        return cache[key]

    kk = _convert_polytope(k, mode)
    probe = _convert_polytope(probe if probe is not None else Polytope.box((0,) * n, (1,) * n), mode)
    e0, etop = _homogeneous_parts(eta, n, probe)

    def eta1(body):
        if not body.is_full_dimensional:
            if body.intrinsic_dim == 0:
                return 0
            return eta(body) - e0
        return eta(body) - e0 - etop * body.volume()

    vol_k = kk.volume()
    eta1_k = eta1(kk)
    total = 0
    for t in xi.terms:
        if not t.density.is_constant:
            raise ValueError("nested evaluation needs constant-density terms in xi")
        c = t.density.constant_value()
        groups = group_bodies(list(t.bodies))
        bodies = [_convert_polytope(b, mode) for b, _ in groups]
        mults = [mu for _, mu in groups]
        neg = [b.scale(-1) for b in bodies]
        eta1_neg = [eta1(b) for b in neg]

        def vol0(p):
            return p.volume() if p.is_full_dimensional else 0

        def func(alpha, bodies=bodies, eta1_neg=eta1_neg):
            comb = _combination(bodies, alpha, n, mode)
            vl = vol0(comb)
            val = e0 * vol0(minkowski_sum(kk, comb)) if any(alpha) else e0 * vol_k
            if n == 2:
                val += eta1_k * vl + etop * vol_k * vl
            else:
                val += etop * vol_k * vl
            if n == 2:
                val += vol_k * sum(a * e for a, e in zip(alpha, eta1_neg))
            return val

        if not mults:
            total += t.weight * c * func(())
            continue
        bound = n
        val, _ = polynomial_derivative(func, mults, [(range(len(mults)), bound)],
                                       mode == sc.RATIONAL)
        total += t.weight * c * val
    return total


# -- graded structure -------------------------------------------------------

@dataclass
class StructureTable:
    constants: dict
    per_body: dict
    spread: dict
    overflow: dict


def graded_generators(n=2, mode=sc.RATIONAL):
    return [euler_generator(n, mode=mode)] + [intrinsic_generator(n, j, mode=mode)
                                             for j in range(1, n + 1)]


def structure_constants(n, bodies, mode=AUTO):
    """Fit ``V_i · V_j = c_ij V_{i+j}`` on every test body; report spreads and overflow terms."""
    gens = graded_generators(n)
    values = {}
    for bi, k in enumerate(bodies):
        values[bi] = [float(eval_valuation(g, k)) for g in gens]
    per_body = {}
    overflow = {}
    for i in range(n + 1):
        for j in range(i, n + 1):
            for bi, k in enumerate(bodies):
                prod_val = float(product_eval(gens[i], gens[j], k, mode).value)
                if i + j <= n:
                    per_body.setdefault((i, j), []).append(prod_val / values[bi][i + j])
                else:
                    norm = abs(values[bi][i] * values[bi][j])
                    overflow.setdefault((i, j), []).append(abs(prod_val) / norm)
    constants = {key: float(np.mean(v)) for key, v in per_body.items()}
    spread = {key: (max(v) - min(v)) / max(abs(constants[key]), 1e-300)
              for key, v in per_body.items()}
    for key, v in overflow.items():
        constants[key] = 0.0
    return StructureTable(constants, per_body, spread, {k: max(v) for k, v in overflow.items()})
