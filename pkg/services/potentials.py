"""
Vector potentials, Frobenius detection and flat pencils of metrics.

This module handles:
- Integrating u-chart structure constants c^i_jk = d_j d_k A^i
- Fitting potentials from exact point values of the natural product
- Interpolating family potentials in the family parameter
- Searching for a constant metric that makes the product Frobenius
- The flat pencil built from a Euclidean or Hessian seed metric
"""

import logging
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .biflat import U_CHART, Connection, Frame, change_chart, curvature, make_level, product_in_u
from .constsolver import sample_levels
from .errors import DivisibilityError, IntegrabilityError, NotAPencilError, SingularMatrixError
from .exprparse import render_expression, render_scalar
from .groups import instantiate
from .multipoly import (
    MultiPolynomial, PolyMatrix, PolyRing, adjugate, determinant, express_in_invariants,
    linear_solve, matrix_inverse, proportional, weighted_monomials
)

logger = logging.getLogger(__name__)

EXTRA_POINTS = 2
MAX_INTERPOLATION_DEGREE = 8


@dataclass
class VectorPotential:
    """A^i in the u-chart, affine terms dropped."""
    A: list

    @property
    def ring(self):
        return self.A[0].ring

    def structure_constants(self):
        n = len(self.A)
        return [[[self.A[i].partial(j).partial(k) for k in range(n)] for j in range(n)] for i in range(n)]

    def render(self):
        return {f"A{i + 1}": render_expression(a) for i, a in enumerate(self.A)}


@dataclass
class FrobeniusCandidate:
    eta: list
    F: MultiPolynomial
    D: object = None
    scale: object = None
    matches_reported: bool = None

    def render(self):
        return {
            'eta': [[render_scalar(x) for x in row] for row in self.eta],
            'F': render_expression(self.F),
            'D': render_scalar(self.D) if self.D is not None else None,
            'scale': render_scalar(self.scale) if self.scale is not None else None,
            'matches_reported': self.matches_reported,
        }


@dataclass
class MetricPencil:
    g: list
    eta: list
    degrees: list
    flatness: dict = field(default_factory=dict)

    def at(self, lam):
        n = len(self.g)
        return [[self.g[i][j] - self.eta[i][j] * lam for j in range(n)] for i in range(n)]

    def render(self):
        return {
            'g': [[render_expression(x) for x in row] for row in self.g],
            'eta': [[render_scalar(x) for x in row] for row in self.eta],
            'flatness': dict(self.flatness),
        }


# Integration
def _homotopy(poly, order):
    """Divide each term of coordinate degree d by (d+1)...(d+order)."""
    n = poly.ring.ncoords
    terms = {}
    for key, value in poly.terms.items():
        d = sum(key[:n])
        factor = 1
        for r in range(1, order + 1):
            factor *= d + r
        terms[key] = value / factor
    return MultiPolynomial(poly.ring, terms)


def integrate_hessian(H, ring):
    """F with d_j d_k F = H[j][k], no affine terms: F = sum u_j u_k int (1-t) H_jk(t u) dt."""
    n = len(H)
    F = ring.zero()
    for j in range(n):
        for k in range(n):
            if H[j][k]:
                F = F + _homotopy(H[j][k], 2) * ring.var(ring.coords[j]) * ring.var(ring.coords[k])
    return F


def integrate_third(T, ring):
    """F with d_i d_j d_k F = T[i][j][k], no terms of degree at most two."""
    n = len(T)
    F = ring.zero()
    for i in range(n):
        for j in range(n):
            for k in range(n):
                if T[i][j][k]:
                    F = F + (_homotopy(T[i][j][k], 3) * ring.var(ring.coords[i]) * ring.var(ring.coords[j])
                             * ring.var(ring.coords[k]))
    return F


def integrate_structure_constants(c, ring):
    """A^i with d_j d_k A^i = c^i_jk; IntegrabilityError when d_l c^i_jk is not symmetric in k, l."""
    n = len(c)
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(k + 1, n):
                    if c[i][j][k].partial(l) != c[i][j][l].partial(k):
                        raise IntegrabilityError(
                            f"d_{l + 1} c^{i + 1}_{j + 1}{k + 1} != d_{k + 1} c^{i + 1}_{j + 1}{l + 1}",
                            indices=(i + 1, j + 1, k + 1, l + 1))
    A = [integrate_hessian(c[i], ring).drop_affine() for i in range(n)]
    potential = VectorPotential(A)
    if potential.structure_constants() != [[[x for x in row] for row in block] for block in c]:
        raise IntegrabilityError("integrated potential does not reproduce the structure constants")
    return potential


# Fitting from point values
def natural_product_values(structures, frame):
    """u-chart structure constants of the natural product at a sample point, as field scalars."""
    level = frame.level
    prod_u = change_chart(structures['prod'], frame, 'p->u')
    scale = level.val(prod_u.scale) if prod_u.scale is not None else None
    n = frame.n
    values = [[[None] * n for _ in range(n)] for _ in range(n)]
    scale_value = scale.constant_value() if scale is not None else 1
    if not scale_value:
        raise ZeroDivisionError("multiplication by the unit field is singular at the sample point")
    for i in range(n):
        for j in range(n):
            for k in range(n):
                value = level.val(prod_u[i][j][k])
                if not value.is_constant():
                    raise IntegrabilityError("natural product still depends on unknown constants")
                values[i][j][k] = value.constant_value() / scale_value
    u_point = [u.at(level.point).constant_value() for u in frame.invariants]
    return u_point, values


def potential_monomials(degrees):
    dn = degrees[-1]
    return [weighted_monomials(degrees, d + dn, min_degree=2) for d in degrees]


def _second_derivative_at(exps, j, k, point, field_):
    """d_j d_k u^exps evaluated at point."""
    e = list(exps)
    coeff = field_.one
    for index in (j, k):
        if not e[index]:
            return field_.zero
        coeff = coeff * e[index]
        e[index] -= 1
    value = coeff
    for x, power in zip(point, e):
        if power:
            value = value * x ** power
    return value


def fit_vector_potential(invariants, degrees, builder, u_ring, points=None, seed=0):
    """
    Undetermined coefficients over u-monomials of weight d_i + d_n (u-degree >= 2),
    fitted from exact values of the natural product and checked on extra points.
    """
    n = len(degrees)
    field_ = u_ring.field
    ring = invariants[0].ring
    monomials = potential_monomials(degrees)
    per_point = n * (n + 1) // 2
    needed = max((len(m) for m in monomials), default=0) // per_point + 2
    count = max(points or 0, needed) + EXTRA_POINTS

    def build(level):
        frame = Frame(level, invariants)
        try:
            structures = builder(frame)
        except SingularMatrixError as e:
            raise ZeroDivisionError(str(e)) from None
        return natural_product_values(structures, frame)

    samples = [result for _, result in sample_levels(ring, count, seed, build)]
    fit, check = samples[:-EXTRA_POINTS], samples[-EXTRA_POINTS:]
    A = []
    for i in range(n):
        mons = monomials[i]
        if not mons:
            A.append(u_ring.zero())
            continue
        rows, rhs = [], []
        for u_point, values in fit:
            for j in range(n):
                for k in range(j, n):
                    rows.append([_second_derivative_at(m, j, k, u_point, field_) for m in mons])
                    rhs.append(values[i][j][k])
        solution = linear_solve(rows, rhs, field_)
        if not solution.consistent:
            raise IntegrabilityError(f"no isobaric potential A{i + 1} reproduces the natural product", indices=(i + 1,))
        if solution.kernel:
            raise IntegrabilityError(f"A{i + 1} is not determined by {len(fit)} sample points", indices=(i + 1,))
        poly = u_ring.zero()
        for m, coeff in zip(mons, solution.particular):
            if coeff:
                poly = poly + MultiPolynomial(u_ring, {tuple(m) + (0,) * (u_ring.nvars - n): coeff})
        A.append(poly)
        for u_point, values in check:
            for j in range(n):
                for k in range(j, n):
                    predicted = sum((_second_derivative_at(m, j, k, u_point, field_) * coeff
                                     for m, coeff in zip(mons, solution.particular)), field_.zero)
                    if predicted != values[i][j][k]:
                        raise IntegrabilityError(f"fitted A{i + 1} fails at a check point", indices=(i + 1, j + 1, k + 1))
    logger.info("Fitted vector potential from %d point(s)", len(fit))
    return VectorPotential(A)


def symbolic_vector_potential(structures, frame, degrees, u_ring):
    """Exact route: natural product pushed to the u-chart, rewritten in u, integrated."""
    prod_u = change_chart(structures['prod'], frame, 'p->u')
    c = product_in_u(prod_u, frame.invariants, degrees, u_ring)
    return integrate_structure_constants(c, u_ring)


# Family potentials
def family_potential(ansatz, relations, free, degrees, builder_for, u_ring, points=None, seed=0, start=1):
    """
    Potential as a polynomial in the free family parameter, by interpolation.

    relations maps the other constants to polynomials in the free one;
    builder_for(values) returns the structures builder at those values.
    Nodes free = start, start+1, ...; the degree grows until one extra node agrees.
    """
    n = len(degrees)
    field_ = u_ring.field
    param_ring = u_ring.with_params((free,))
    nodes, fits = [], []

    def fit_at(t):
        values = {free: Fraction(t)}
        for name, poly in relations.items():
            value = poly.evaluate({free: t}) if isinstance(poly, MultiPolynomial) else poly
            values[name] = value.constant_value() if isinstance(value, MultiPolynomial) else value
        inst = instantiate(ansatz, values)
        inst_ring = inst.ring.with_params(())
        invariants = [u.to_ring(inst_ring) for u in inst.invariants]
        return fit_vector_potential(invariants, degrees, builder_for(values), u_ring, points, seed)

    t = start
    for degree in range(MAX_INTERPOLATION_DEGREE + 1):
        while len(nodes) < degree + 2:
            if t - start > 4 * (MAX_INTERPOLATION_DEGREE + 2):
                raise IntegrabilityError(f"too many degenerate values of {free}")
            try:
                fits.append(fit_at(t))
                nodes.append(Fraction(t))
            except (SingularMatrixError, ZeroDivisionError) as e:
                logger.info("Skipping family node %s = %s: %s", free, t, e)
            t += 1
        candidate = [_interpolate([f.A[i] for f in fits[:degree + 1]], nodes[:degree + 1], param_ring, free)
                     for i in range(n)]
        spare = nodes[degree + 1]
        if all(_same(candidate[i], fits[degree + 1].A[i], free, spare, param_ring) for i in range(n)):
            logger.info("Family potential in %s has degree %d", free, degree)
            return VectorPotential(candidate)
    raise IntegrabilityError(f"family potential is not polynomial of degree <= {MAX_INTERPOLATION_DEGREE} in {free}")


def _same(candidate, value, free, spare, ring):
    evaluated = candidate.evaluate({free: spare})
    if not isinstance(evaluated, MultiPolynomial):
        evaluated = ring.const(evaluated)
    return evaluated == value.to_ring(ring)


def _interpolate(polys, nodes, ring, free):
    """Newton interpolation of u-polynomials sampled at rational nodes of free."""
    lifted = [p.to_ring(ring) for p in polys]
    coeffs = list(lifted)
    m = len(nodes)
    for level in range(1, m):
        for i in range(m - 1, level - 1, -1):
            coeffs[i] = (coeffs[i] - coeffs[i - 1]) / (nodes[i] - nodes[i - level])
    x = ring.var(free)
    result = coeffs[-1]
    for i in range(m - 2, -1, -1):
        result = result * (x - nodes[i]) + coeffs[i]
    return result


# Frobenius structures
def frobenius_detect(c, degrees, ring, rng=None, attempts=5):
    """
    Constant invertible symmetric eta with eta_il c^l_jk symmetric in i, j,
    the potential F with d_i d_j d_k F = eta_il c^l_jk and the charge D.
    None when no invertible eta exists.
    """
    n = len(c)
    field_ = ring.field
    index = {}
    for a in range(n):
        for b in range(a, n):
            index[(a, b)] = len(index)
    rows = []
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(n):
                collected = {}
                for l in range(n):
                    for key, value in c[l][j][k].terms.items():
                        row = collected.setdefault(key, [field_.zero] * len(index))
                        row[index[(min(i, l), max(i, l))]] += value
                    for key, value in c[l][i][k].terms.items():
                        row = collected.setdefault(key, [field_.zero] * len(index))
                        row[index[(min(j, l), max(j, l))]] -= value
                rows.extend(r for r in collected.values() if any(r))
    if rows:
        solution = linear_solve(rows, [field_.zero] * len(rows), field_)
        kernel = solution.kernel
    else:
        kernel = [[field_.one if t == s else field_.zero for t in range(len(index))] for s in range(len(index))]
    if not kernel:
        logger.info("No nonzero symmetric eta makes the product Frobenius")
        return None
    rng = rng or random.Random(0)
    for attempt in range(attempts):
        if len(kernel) == 1:
            vector = kernel[0]
        else:
            weights = [rng.randint(1, 9) for _ in kernel]
            vector = [sum((w * v[t] for w, v in zip(weights, kernel)), field_.zero) for t in range(len(index))]
        eta = [[vector[index[(min(a, b), max(a, b))]] for b in range(n)] for a in range(n)]
        if determinant(PolyMatrix(eta)):
            break
        if len(kernel) == 1:
            eta = None
            break
    else:
        eta = None
    if eta is None:
        logger.info("Compatible metrics exist but none is invertible")
        return None
    lowered = [[[sum((c[l][j][k] * eta[i][l] for l in range(n) if eta[i][l]), ring.zero())
                 for k in range(n)] for j in range(n)] for i in range(n)]
    F = integrate_third(lowered, ring)
    for i in range(n):
        for j in range(n):
            for k in range(n):
                if F.partial(i).partial(j).partial(k) != lowered[i][j][k]:
                    logger.info("Lowered structure constants are not third derivatives")
                    return None
    charges = {degrees[a] + degrees[b] for a in range(n) for b in range(n) if eta[a][b]}
    D = charges.pop() if len(charges) == 1 else None
    return FrobeniusCandidate(eta, F, D)


def normalize_frobenius(candidate, reported_F):
    """Scale eta and F so F matches the reported potential (terms of degree <= 2 ignored)."""
    if candidate is None or reported_F is None:
        return candidate
    ours = _drop_quadratic(candidate.F)
    theirs = _drop_quadratic(reported_F.to_ring(candidate.F.ring))
    ratio = proportional(ours, theirs)
    if ratio is None or not ratio:
        candidate.matches_reported = False
        return candidate
    candidate.F = candidate.F / ratio
    candidate.eta = [[x / ratio for x in row] for row in candidate.eta]
    candidate.scale = 1 / ratio
    candidate.matches_reported = True
    return candidate


def _drop_quadratic(poly):
    n = poly.ring.ncoords
    return MultiPolynomial(poly.ring, {k: v for k, v in poly.terms.items() if sum(k[:n]) > 2})


# Flat pencils
def seed_metric(invariants, seed='euclidean', metric=None):
    """Contravariant metric pushed to the invariants, entries as p-polynomials."""
    ring = invariants[0].ring
    n = len(invariants)
    field_ = ring.field
    J = [[u.partial(a) for a in range(n)] for u in invariants]
    if seed == 'euclidean':
        G = metric or [[field_.one if a == b else field_.zero for b in range(n)] for a in range(n)]
        G = [[ring.const(x) for x in row] for row in G]
        den = None
    elif seed == 'hessian':
        H = PolyMatrix([[invariants[0].partial(a).partial(b) for b in range(n)] for a in range(n)])
        G = adjugate(H).rows
        den = determinant(H)
        if not den:
            raise NotAPencilError("Hessian of the lowest invariant is degenerate")
    else:
        raise NotAPencilError(f"unknown seed metric {seed!r}")
    g = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            acc = ring.zero()
            for a in range(n):
                for b in range(n):
                    if G[a][b]:
                        acc = acc + J[i][a] * G[a][b] * J[j][b]
            if den is not None:
                try:
                    acc = acc.exact_divide(den)
                except DivisibilityError:
                    raise NotAPencilError(f"g^{i + 1}{j + 1} is not polynomial in p") from None
            g[i][j] = g[j][i] = acc
    return g


def euclidean_pencil(spec, invariants, seed='euclidean', metric=None, reported_eta=None):
    """
    g in the invariants, eta = Lie_e g (e = d/du^n) and the Frobenius potential
    solving eta^il eta^jm d_l d_m F = g^ij / deg(g^ij).
    """
    n = len(invariants)
    degrees = spec.degrees
    u_ring = spec.u_ring
    un = u_ring.coords[-1]
    g_p = seed_metric(invariants, seed, metric)
    g = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            g[i][j] = g[j][i] = express_in_invariants(g_p[i][j], invariants, degrees, u_ring)
    for i in range(n):
        for j in range(n):
            if g[i][j].degree_in(un) > 1:
                raise NotAPencilError(f"g^{i + 1}{j + 1} is not linear in {un}")
    eta = [[g[i][j].partial(un) for j in range(n)] for i in range(n)]
    if any(not x.is_constant() for row in eta for x in row):
        raise NotAPencilError("Lie_e g is not constant")
    eta = [[x.constant_value() for x in row] for row in eta]
    if not determinant(PolyMatrix(eta)):
        raise NotAPencilError("Lie_e g is degenerate")
    if reported_eta is not None:
        ratio = _matrix_ratio(eta, reported_eta)
        if ratio:
            g = [[x / ratio for x in row] for row in g]
            eta = [[x / ratio for x in row] for row in eta]
    eta_inv = matrix_inverse(PolyMatrix(eta)).rows
    scaled = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if not g[i][j]:
                scaled[i][j] = u_ring.zero()
                continue
            deg = g[i][j].weighted_degree(degrees)
            if deg is None:
                raise NotAPencilError(f"g^{i + 1}{j + 1} is not quasi-homogeneous")
            if not deg:
                raise NotAPencilError(f"g^{i + 1}{j + 1} has degree zero")
            scaled[i][j] = g[i][j] / deg
    H = [[sum((scaled[a][b] * (eta_inv[l][a] * eta_inv[b][m]) for a in range(n) for b in range(n)
               if eta_inv[l][a] and eta_inv[b][m]), u_ring.zero()) for m in range(n)] for l in range(n)]
    F = integrate_hessian(H, u_ring)
    for l in range(n):
        for m in range(n):
            if F.partial(l).partial(m) != H[l][m]:
                raise IntegrabilityError("the pencil equations for F are inconsistent", indices=(l + 1, m + 1))
    F = _drop_quadratic(F)
    charges = {degrees[a] + degrees[b] for a in range(n) for b in range(n) if eta[a][b]}
    candidate = FrobeniusCandidate(eta, F, charges.pop() if len(charges) == 1 else None)
    logger.info("Pencil for %s: eta %s", spec.name, [[render_scalar(x) for x in row] for row in eta])
    return MetricPencil(g, eta, list(degrees)), candidate


def _matrix_ratio(a, b):
    ratio = None
    for row_a, row_b in zip(a, b):
        for x, y in zip(row_a, row_b):
            if not y:
                if x:
                    return None
                continue
            q = x / y
            if ratio is None:
                ratio = q
            elif q != ratio:
                return None
    return ratio


def pencil_flatness(pencil, lambdas):
    """Levi-Civita curvature of g - lam * eta for each lam (symbolic in u)."""
    results = {}
    for lam in lambdas:
        G = pencil.at(lam)
        ring = G[0][0].ring
        n = len(G)
        level = make_level(ring)
        try:
            K = level.inverse_matrix(G)
        except SingularMatrixError:
            results[render_scalar(lam)] = 'degenerate'
            continue
        up = [[level.lift(x) for x in row] for row in G]
        dK = [[[level.d(K[a][b], m) for m in range(n)] for b in range(n)] for a in range(n)]
        gamma = [[[None] * n for _ in range(n)] for _ in range(n)]
        for k in range(n):
            for i in range(n):
                for j in range(i, n):
                    acc = level.const(0)
                    for l in range(n):
                        if G[k][l]:
                            acc = acc + up[k][l] * (dK[l][j][i] + dK[l][i][j] - dK[i][j][l])
                    gamma[k][i][j] = gamma[k][j][i] = acc * Fraction(1, 2)
        residual = curvature(Connection(U_CHART, gamma, level))
        results[render_scalar(lam)] = 'pass' if residual.passed else residual.witness()
        logger.info("Pencil flatness at lambda = %s: %s", render_scalar(lam),
                    'pass' if residual.passed else 'fail')
    pencil.flatness = results
    return results
