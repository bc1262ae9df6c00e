"""Differential cycles of piecewise-linear convex functions.

For ``f = max_i (<g_i, x> + c_i)`` the differential cycle is the graph of
the subgradient, a closed d-dimensional current in ``R^d x R^d`` built
from horizontal cells ``R_i x {g_i}`` over linearity regions and vertical
cells ``F x conv{g_i : i active on F}`` over lower-dimensional faces.
Everything is computed in exact rational arithmetic; unbounded regions are
clipped to a bounding box.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial, prod

import numpy as np

from . import scalar as sc
from .errors import ConvexityError, DimensionError, EmptyInputError, EmptyIntersectionError
from .poly import Polynomial
from .polytope import Polytope, clip, convex_hull

DEFAULT_BOX = 10


@dataclass(frozen=True)
class PLConvexFunction:
    """``x -> max_i <grad_i, x> + offset_i`` on ``R^d`` (d = 1 or 2), rational data."""

    dim: int
    pieces: tuple
    box: int = DEFAULT_BOX

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise DimensionError("PL convex functions are supported in dimensions 1 and 2")
        if not self.pieces:
            raise EmptyInputError("a PL convex function needs at least one affine piece")

    @classmethod
    def from_pieces(cls, dim, pieces, box=DEFAULT_BOX):
        """Normalize to rationals, merge equal gradients and drop inactive pieces."""
        best = {}
        for g, c in pieces:
            g = tuple(sc.to_rational(x) for x in g)
            if len(g) != dim:
                raise DimensionError("gradient length differs from the dimension")
            c = sc.to_rational(c)
            if g not in best or c > best[g]:
                best[g] = c
        raw = cls(dim, tuple(sorted(best.items())), box)
        active = [p for p, region in zip(raw.pieces, raw.regions(drop_empty=False))
                  if region is not None]
        return cls(dim, tuple(active), box)

    def __call__(self, x):
        x = [sc.to_rational(v) for v in x]
        return max(sc.dot(g, x) + c for g, c in self.pieces)

    def box_polytope(self):
        b = self.box
        return Polytope.box((-b,) * self.dim, (b,) * self.dim)

    def regions(self, drop_empty=True):
        """Full-dimensional linearity region of each piece inside the box (or None)."""
        out = []
        for i, (gi, ci) in enumerate(self.pieces):
            region = self.box_polytope()
            try:
                for j, (gj, cj) in enumerate(self.pieces):
                    if j != i:
                        # <gj - gi, x> <= ci - cj
                        region = clip(region, sc.sub(gj, gi), ci - cj)
            except EmptyIntersectionError:
                region = None
            if region is not None and not region.is_full_dimensional:
                region = None
            out.append(region)
        return [r for r in out if r is not None] if drop_empty else out

    def active(self, x):
        vals = [sc.dot(g, x) + c for g, c in self.pieces]
        top = max(vals)
        return [i for i, v in enumerate(vals) if v == top]

    def maximum(self, other):
        return PLConvexFunction.from_pieces(self.dim, self.pieces + other.pieces, self.box)


# -- cells -------------------------------------------------------------------

@dataclass(frozen=True)
class DCell:
    """Product cell ``conv(xverts) x conv(yverts)`` in ``R^d x R^d``."""

    xverts: tuple
    yverts: tuple
    kind: str

    @property
    def xdim(self):
        return _affine_dim(self.xverts)

    @property
    def ydim(self):
        return _affine_dim(self.yverts)


@dataclass
class DifferentialCycle:
    dim: int
    cells: list
    box: int = DEFAULT_BOX
    multiplicities: list = field(default_factory=list)

    def __post_init__(self):
        if not self.multiplicities:
            self.multiplicities = [1] * len(self.cells)

    def __add__(self, other):
        return DifferentialCycle(self.dim, self.cells + other.cells, self.box,
                                 self.multiplicities + other.multiplicities)

    def __neg__(self):
        return DifferentialCycle(self.dim, list(self.cells), self.box,
                                 [-m for m in self.multiplicities])

    def __sub__(self, other):
        return self + (-other)

    def horizontal(self):
        return [c for c in self.cells if c.kind == "horizontal"]

    def vertical(self):
        return [c for c in self.cells if c.kind == "vertical"]


def _affine_dim(pts):
    if len(pts) <= 1:
        return 0
    return sc.rank([sc.sub(p, pts[0]) for p in pts[1:]])


def _ordered_polygon(pts):
    """Vertices of a planar convex polygon in counter-clockwise order (exact)."""
    return list(convex_hull(pts).vertices)


def _hull_vertices(points):
    points = list(dict.fromkeys(points))
    if len(points) == 1:
        return tuple(points)
    p = convex_hull(points)
    if p.intrinsic_dim == 1:
        return tuple(sorted(p.vertices))
    return tuple(p.vertices)


def _on_box_face(pts, box, d):
    return any(all(p[axis] == side for p in pts) for axis in range(d) for side in (-box, box))


def differential_cycle(f):
    """Cells of ``D(f)`` restricted to ``(open box) x R^d``.

    Vertical cells over the box boundary are dropped: there the subgradient
    depends on pieces outside the box.
    """
    cells = []
    regions = f.regions(drop_empty=False)
    for (g, _), region in zip(f.pieces, regions):
        if region is not None:
            cells.append(DCell(tuple(region.vertices), (g,), "horizontal"))
    d = f.dim
    real = [(i, r) for i, r in enumerate(regions) if r is not None]
    if d == 1:
        points = sorted({v for _, r in real for v in r.vertices})
        for x in points:
            act = f.active(x)
            if len(act) >= 2 and not _on_box_face([x], f.box, 1):
                grads = [f.pieces[i][0] for i in act]
                cells.append(DCell((x,), _hull_vertices(grads), "vertical"))
        return DifferentialCycle(1, cells, f.box)
    # edges shared by two regions
    for (i, ri), (j, rj) in itertools.combinations(real, 2):
        common = [v for v in ri.vertices if v in set(rj.vertices)]
        if len(common) == 2 and not _on_box_face(common, f.box, 2):
            a, b = sorted(common)
            mid = tuple((x + y) / 2 for x, y in zip(a, b))
            act = f.active(mid)
            grads = _hull_vertices([f.pieces[k][0] for k in act])
            cells.append(DCell((a, b), grads, "vertical"))
    # vertices where at least three pieces meet
    points = sorted({v for _, r in real for v in r.vertices})
    for x in points:
        act = f.active(x)
        if len(act) >= 3 and not _on_box_face([x], f.box, 2):
            grads = [f.pieces[k][0] for k in act]
            if _affine_dim(grads) == 2:
                cells.append(DCell((x,), _hull_vertices(grads), "vertical"))
    return DifferentialCycle(2, cells, f.box)


# -- orientation and boundary ------------------------------------------------

def _simplices(pts):
    pts = list(pts)
    k = _affine_dim(pts)
    if k == 0:
        return [(pts[0],)]
    if k == 1:
        a, b = min(pts), max(pts)
        return [(a, b)]
    ring = _ordered_polygon(pts)
    return [(ring[0], ring[i], ring[i + 1]) for i in range(1, len(ring) - 1)]


def _param(xs, ys, d):
    """Frame columns (2d-vectors) and offset of the product simplex parametrization."""
    cols = []
    zero = (Fraction(0),) * d
    for p in xs[1:]:
        cols.append(sc.sub(p, xs[0]) + zero)
    for q in ys[1:]:
        cols.append(zero + sc.sub(q, ys[0]))
    return cols, tuple(xs[0]) + tuple(ys[0])


def _minty_sign(cols, d):
    """Orientation making ``(x, y) -> x + y`` orientation preserving."""
    m = [[c[r] + c[d + r] for c in cols] for r in range(d)]
    s = sc.det(m)
    if s == 0:
        raise ConvexityError("degenerate differential cycle cell")
    return 1 if s > 0 else -1


def formal_boundary(cycle):
    """Signed (d-1)-cells of the boundary, keyed canonically; zero entries removed."""
    d = cycle.dim
    acc = {}
    for cell, mult in zip(cycle.cells, cycle.multiplicities):
        if d == 1:
            xs, ys = _simplices(cell.xverts)[0], _simplices(cell.yverts)[0]
            cols, _ = _param(xs, ys, 1)
            s = _minty_sign(cols, 1)
            ends = [(xs[0] + ys[0]), (xs[-1] + ys[-1])]
            for pt, sign in ((ends[0], -1), (ends[1], 1)):
                acc[pt] = acc.get(pt, 0) + mult * s * sign
            continue
        pts = [x + y for x in cell.xverts for y in cell.yverts]
        ring, s = _oriented_ring(pts, cell, d)
        for a, b in zip(ring, ring[1:] + ring[:1]):
            key, sign = ((a, b), 1) if a < b else ((b, a), -1)
            acc[key] = acc.get(key, 0) + mult * s * sign
    return {k: v for k, v in acc.items() if v != 0}


def _oriented_ring(pts, cell, d):
    """Boundary loop of a planar 2-cell in R^4, counter-clockwise for its orientation."""
    pts = list(dict.fromkeys(pts))
    xs = _simplices(cell.xverts)[0]
    ys = _simplices(cell.yverts)[0]
    cols, origin = _param(xs, ys, d)
    s = _minty_sign(cols, d)
    rows = [r for r in range(2 * d)]
    # two coordinates on which the frame is invertible
    pivots = next(pr for pr in itertools.combinations(rows, 2)
                  if sc.det([[cols[0][pr[0]], cols[1][pr[0]]], [cols[0][pr[1]], cols[1][pr[1]]]]) != 0)
    mat = [[cols[0][p], cols[1][p]] for p in pivots]
    inv_det = 1 / sc.det(mat)
    coords = []
    for p in pts:
        r = [p[k] - origin[k] for k in pivots]
        a = (r[0] * mat[1][1] - r[1] * mat[0][1]) * inv_det
        b = (mat[0][0] * r[1] - mat[1][0] * r[0]) * inv_det
        coords.append((a, b))
    hull = convex_hull(coords)
    index = {c: p for c, p in zip(coords, pts)}
    ring = [index[c] for c in hull.vertices]
    return ring, s


def on_box_boundary(key, cycle):
    """Whether a boundary (d-1)-cell lies over the boundary of the clipping box."""
    b = cycle.box
    d = cycle.dim
    pts = [key] if d == 1 else list(key)
    for axis in range(d):
        for side in (-b, b):
            if all(p[axis] == side for p in pts):
                return True
    return False


def is_closed(cycle):
    """Formal boundary cancels away from the clipping box."""
    residual = formal_boundary(cycle)
    return all(on_box_boundary(k, cycle) for k in residual)


# -- exact form integration ----------------------------------------------------

@dataclass
class PolynomialForm:
    """``sum_I p_I(z) dz_I`` on ``R^d x R^d`` with rational polynomial coefficients."""

    dim: int
    components: dict  # subset tuple -> Polynomial in 2d variables

    def degree(self):
        return max((p.degree() for p in self.components.values()), default=0)


def random_pl_form(dim, rng, degree=2, denominator=7):
    subsets = list(itertools.combinations(range(2 * dim), dim))
    exps = [e for e in itertools.product(range(degree + 1), repeat=2 * dim) if sum(e) <= degree]
    comps = {}
    for s in subsets:
        terms = {e: Fraction(int(rng.integers(-denominator, denominator + 1)), denominator)
                 for e in exps}
        comps[s] = Polynomial(2 * dim, terms)
    return PolynomialForm(dim, comps)


def _dirichlet(exps, k):
    """``int_{std k-simplex} t^exps dt``."""
    if k == 0:
        return Fraction(1)
    return Fraction(prod(factorial(e) for e in exps), factorial(sum(exps) + k))


def _moments(cols, origin, k, d, degree):
    """Exact integrals of all monomials ``z^gamma`` (|gamma| <= degree) over the parametrized product simplex."""
    nv = len(cols)
    matrix = [[cols[j][r] for j in range(nv)] for r in range(2 * d)]
    out = {}
    zs = [Polynomial.affine(row, origin[r]) if nv else Polynomial.constant(0, origin[r])
          for r, row in enumerate(matrix)]
    for gamma in itertools.product(range(degree + 1), repeat=2 * d):
        if sum(gamma) > degree:
            continue
        p = Polynomial.constant(nv, 1)
        for z, e in zip(zs, gamma):
            if e:
                p = p * (z ** e)
        total = Fraction(0)
        for e, c in p.terms.items():
            total += c * _dirichlet(e[:k], k) * _dirichlet(e[k:], nv - k)
        out[gamma] = total
    return out


class CellIntegrator:
    """Caches monomial moments per product simplex so many forms are cheap to integrate."""

    def __init__(self, degree):
        self.degree = degree
        self.cache = {}

    def pieces(self, cell, d):
        key = (cell.xverts, cell.yverts)
        if key not in self.cache:
            out = []
            for xs in _simplices(cell.xverts):
                for ys in _simplices(cell.yverts):
                    cols, origin = _param(xs, ys, d)
                    sign = _minty_sign(cols, d)
                    moments = _moments(cols, origin, len(xs) - 1, d, self.degree)
                    minors = {s: sc.det([[c[r] for c in cols] for r in s])
                              for s in itertools.combinations(range(2 * d), d)}
                    out.append((sign, minors, moments))
            self.cache[key] = out
        return self.cache[key]

    def integrate(self, cycle, form):
        total = Fraction(0)
        for cell, mult in zip(cycle.cells, cycle.multiplicities):
            for sign, minors, moments in self.pieces(cell, cycle.dim):
                for s, poly in form.components.items():
                    m = minors[s]
                    if m == 0:
                        continue
                    val = sum(c * moments[e] for e, c in poly.terms.items())
                    total += mult * sign * m * val
        return total


def integrate_pl_form(cycle, form):
    return CellIntegrator(form.degree()).integrate(cycle, form)


# -- max/min identity ----------------------------------------------------------

def _arrangement_points(pieces, dim, box):
    """Vertices of the arrangement of all equal-value loci and the box, inside the box."""
    lines = []
    for (g1, c1), (g2, c2) in itertools.combinations(pieces, 2):
        a = sc.sub(g1, g2)
        if any(a):
            lines.append((a, c2 - c1))
    for axis in range(dim):
        e = tuple(Fraction(int(k == axis)) for k in range(dim))
        lines += [(e, Fraction(box)), (e, Fraction(-box))]
    pts = set()
    if dim == 1:
        for a, b in lines:
            x = (b / a[0],)
            if -box <= x[0] <= box:
                pts.add(x)
        return pts
    for (a1, b1), (a2, b2) in itertools.combinations(lines, 2):
        det = a1[0] * a2[1] - a1[1] * a2[0]
        if det == 0:
            continue
        x = ((b1 * a2[1] - b2 * a1[1]) / det, (a1[0] * b2 - a2[0] * b1) / det)
        if all(-box <= c <= box for c in x):
            pts.add(x)
    return pts


def convex_minimum(f, g):
    """``min(f, g)`` as a PL convex function; raises ConvexityError if it is not convex."""
    candidates = list(dict.fromkeys(f.pieces + g.pieces))
    pts = _arrangement_points(candidates, f.dim, f.box)
    below = [p for p in candidates
             if all(sc.dot(p[0], x) + p[1] <= min(f(x), g(x)) for x in pts)]
    if not below:
        raise ConvexityError("min(f, g) is not convex")
    m = PLConvexFunction.from_pieces(f.dim, below, f.box)
    for x in pts:
        if m(x) != min(f(x), g(x)):
            raise ConvexityError("min(f, g) is not convex")
    return m


def maxmin_additivity_check(f, g, forms=50, seed=0, degree=2):
    """Max |int D(max) + D(min) - D(f) - D(g)| over random exact test forms."""
    if f.dim != g.dim or f.box != g.box:
        raise DimensionError("f and g must share dimension and bounding box")
    lo = convex_minimum(f, g)
    hi = f.maximum(g)
    lhs = differential_cycle(hi) + differential_cycle(lo)
    rhs = differential_cycle(f) + differential_cycle(g)
    for c in (lhs, rhs):
        if not is_closed(c):
            raise ConvexityError("differential cycle failed the closedness invariant")
    rng = np.random.default_rng(seed)
    integ = CellIntegrator(degree)
    worst = Fraction(0)
    for _ in range(forms):
        form = random_pl_form(f.dim, rng, degree)
        worst = max(worst, abs(integ.integrate(lhs, form) - integ.integrate(rhs, form)))
    return worst


def integral_condition_residual(f, test, degree=None):
    """Compare ``sum over horizontal cells of int test(x, grad)`` with ``int test(x, df(x)) dx``.

    ``test`` is a polynomial in 2d variables. The right side is integrated
    over the box by splitting it at the linearity regions through direct
    pointwise pieces, so both sides use independent cell data.
    """
    d = f.dim
    lhs = Fraction(0)
    for cell in differential_cycle(f).horizontal():
        g = cell.yverts[0]
        for xs in _simplices(cell.xverts):
            sub = test.compose_affine([[int(i == j) for j in range(d)] for i in range(d)]
                                      + [[0] * d for _ in range(d)], (0,) * d + tuple(g))
            lhs += sub.integrate_simplex(list(xs))
    # right side: grid of the arrangement; each arrangement cell has one gradient
    rhs = Fraction(0)
    pts = sorted(_arrangement_points(f.pieces, d, f.box))
    if d == 1:
        for a, b in zip(pts, pts[1:]):
            mid = ((a[0] + b[0]) / 2,)
            g = f.pieces[f.active(mid)[0]][0]
            sub = test.compose_affine([[1], [0]], (0,) + tuple(g))
            rhs += sub.integrate_simplex([a, b])
    else:
        for region in f.regions():
            for simplex in region.triangulate():
                c = tuple(sum(p[k] for p in simplex) / len(simplex) for k in range(d))
                g = f.pieces[f.active(c)[0]][0]
                sub = test.compose_affine([[1, 0], [0, 1], [0, 0], [0, 0]], (0, 0) + tuple(g))
                rhs += sub.integrate_simplex(list(simplex))
    return lhs - rhs


# -- random inputs ---------------------------------------------------------------

def random_pl_function(dim, rng, pieces=4, scale=3, denominator=4):
    """Random PL convex function with small rational data."""
    raw = []
    for _ in range(pieces):
        g = tuple(Fraction(int(rng.integers(-scale * denominator, scale * denominator + 1)),
                           denominator) for _ in range(dim))
        c = Fraction(int(rng.integers(-scale * denominator, scale * denominator + 1)), denominator)
        raw.append((g, c))
    return PLConvexFunction.from_pieces(dim, raw)


def random_convex_min_pair(dim, rng, base_pieces=3, attempts=200):
    """Pair ``(f, g)`` with ``min(f, g)`` convex: two bumps on a common convex base."""
    for _ in range(attempts):
        h = random_pl_function(dim, rng, base_pieces)
        bumps = []
        for _ in range(2):
            x0 = tuple(Fraction(int(rng.integers(-32, 33)), 4) for _ in range(dim))
            gi = h.pieces[h.active(x0)[0]][0]
            tilt = tuple(gc + Fraction(int(rng.integers(-4, 5)), 4) for gc in gi)
            lift = Fraction(int(rng.integers(1, 9)), 4)
            bumps.append((tilt, h(x0) + lift - sc.dot(tilt, x0)))
        f = PLConvexFunction.from_pieces(dim, h.pieces + (bumps[0],))
        g = PLConvexFunction.from_pieces(dim, h.pieces + (bumps[1],))
        try:
            convex_minimum(f, g)
        except ConvexityError:
            continue
        if len(f.pieces) > len(h.pieces) or len(g.pieces) > len(h.pieces):
            return f, g
    raise ConvexityError("no admissible pair found")


def interchange_matches(p, box=DEFAULT_BOX):
    """Structural comparison of ``D(h_P)`` with the interchanged conic normal cycle of a polygon."""
    if p.dim != 2 or not p.is_full_dimensional or p.mode != sc.RATIONAL:
        raise DimensionError("needs a full-dimensional rational polygon")
    h = PLConvexFunction.from_pieces(2, [(v, 0) for v in p.vertices], box)
    cyc = differential_cycle(h)
    grads = {c.yverts[0] for c in cyc.horizontal()}
    if grads != set(p.vertices):
        return False
    edges = {frozenset(c.yverts) for c in cyc.vertical() if len(c.xverts) == 2}
    if edges != {frozenset((p.vertices[i], p.vertices[j])) for i, j in p.edges()}:
        return False
    # each edge cell sits on the outer normal ray of its polygon edge
    for c in cyc.vertical():
        if len(c.xverts) == 2:
            a, b = c.yverts
            ray_pt = next(x for x in c.xverts if any(x))
            if sc.dot(ray_pt, sc.sub(b, a)) != 0:
                return False
    base = [c for c in cyc.vertical() if len(c.xverts) == 1]
    return len(base) == 1 and set(base[0].yverts) == set(p.vertices) and not any(base[0].xverts[0])
