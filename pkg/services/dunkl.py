"""
Mirror arrangements and Dunkl-Kohno products.

This module handles:
- Hermitian projections onto the complement of a mirror
- The normalizing sum of weighted projections
- Dunkl-Kohno dual products as logarithmic tensor terms
- Weight fitting against a dual product computed from the invariants
- Vee-system checks (one-parameter flatness and the plane condition)
- Vector and scalar logarithmic potentials
- Family correction tensors with weights summing to zero
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, lcm

from .biflat import P_CHART, Connection, ProductStructure, curvature, lift_log_tensor, make_level
from .errors import (
    DegenerateFormError, InvalidFamilyError, IsotropicCovectorError, NoWeightsError,
    NormalizationError, SingularMatrixError
)
from .exprparse import render_expression, render_scalar
from .groups import Mirror, linear_form
from .multipoly import PolyMatrix, PolyRing, determinant, linear_solve, matrix_inverse
from .numberfield import NumberFieldElement, conjugate_scalar

logger = logging.getLogger(__name__)

MULTIPLIER = 'lam'


# Linear algebra on constant matrices
def _inverse(matrix):
    try:
        return matrix_inverse(PolyMatrix(matrix)).rows
    except SingularMatrixError:
        raise DegenerateFormError("form is degenerate") from None


def _is_scalar_identity(matrix, field_):
    n = len(matrix)
    value = matrix[0][0]
    for i in range(n):
        for j in range(n):
            expected = value if i == j else field_.zero
            if matrix[i][j] != expected:
                return None
    return value


def _apply(matrix, vector, zero):
    return [sum((row[m] * vector[m] for m in range(len(vector))), zero) for row in matrix]


def _pair(covector, vector, zero):
    return sum((a * v for a, v in zip(covector, vector)), zero)


# Arrangements
class Arrangement:
    """Mirrors with a Hermitian metric h; projections use the inverse components h^im."""

    def __init__(self, mirrors, hermitian, field_):
        self.mirrors = list(mirrors)
        self.field = field_
        self.hermitian = [[field_.coerce(x) for x in row] for row in hermitian]
        self.n = len(self.hermitian)
        for i in range(self.n):
            for j in range(self.n):
                if self.hermitian[i][j] != conjugate_scalar(field_, self.hermitian[j][i]):
                    raise DegenerateFormError(f"metric is not Hermitian at ({i + 1}, {j + 1})")
        self.inverse = _inverse(self.hermitian)
        for s, mirror in enumerate(self.mirrors):
            if len(mirror.covector) != self.n:
                raise DegenerateFormError(f"mirror {s + 1} has {len(mirror.covector)} components for rank {self.n}")

    @classmethod
    def from_spec(cls, spec, weights=None):
        mirrors = spec.mirrors
        if weights:
            mirrors = [Mirror(m.covector, m.order, w) for m, w in zip(mirrors, weights)]
        return cls(mirrors, spec.hermitian, spec.field)

    def with_weights(self, weights):
        mirrors = [Mirror(m.covector, m.order, w) for m, w in zip(self.mirrors, weights)]
        return Arrangement(mirrors, self.hermitian, self.field)

    @property
    def weights(self):
        return [m.weight for m in self.mirrors]

    @property
    def orders(self):
        return [m.order for m in self.mirrors]

    def dual_vector(self, covector):
        """h^im conj(alpha)_m."""
        conj = [conjugate_scalar(self.field, a) for a in covector]
        return _apply(self.inverse, conj, self.field.zero)

    def norm(self, covector):
        value = _pair(covector, self.dual_vector(covector), self.field.zero)
        if not value:
            raise IsotropicCovectorError(f"covector {[render_scalar(a) for a in covector]} is isotropic")
        return value

    def projection(self, covector):
        return projection(covector, self.hermitian, self.field, inverse=self.inverse)


def projection(covector, hermitian, field_, inverse=None):
    """pi^i_j = h^im conj(alpha)_m alpha_j / |alpha|^2."""
    covector = [field_.coerce(a) for a in covector]
    inverse = inverse if inverse is not None else _inverse([[field_.coerce(x) for x in row] for row in hermitian])
    conj = [conjugate_scalar(field_, a) for a in covector]
    vec = _apply(inverse, conj, field_.zero)
    norm = _pair(covector, vec, field_.zero)
    if not norm:
        raise IsotropicCovectorError("covector is isotropic for the Hermitian metric")
    return [[vec[i] * covector[j] / norm for j in range(len(covector))] for i in range(len(covector))]


def normalization_sum(arr, weights=None):
    """(sum_s k_s pi_s, N) with N set when the sum is N * Id, else None."""
    weights = weights if weights is not None else arr.weights
    n, zero = arr.n, arr.field.zero
    total = [[zero] * n for _ in range(n)]
    for mirror, weight in zip(arr.mirrors, weights):
        pi = arr.projection(mirror.covector)
        for i in range(n):
            for j in range(n):
                total[i][j] = total[i][j] + pi[i][j] * weight
    return total, _is_scalar_identity(total, arr.field)


# Dunkl-Kohno products
def _term(arr, covector, scale):
    """scale * alpha_j alpha_k h^im conj(alpha)_m / |alpha|^2 as a nested list [i][j][k]."""
    vec = arr.dual_vector(covector)
    factor = scale / arr.norm(covector)
    n = arr.n
    return [[[vec[i] * covector[j] * covector[k] * factor for k in range(n)] for j in range(n)] for i in range(n)]


def dk_terms(arr, ring, weights=None, N=None):
    """Logarithmic terms (T_s, alpha_s) of c* = sum_s T_s / alpha_s(p)."""
    weights = weights if weights is not None else arr.weights
    if N is None:
        _, N = normalization_sum(arr, weights)
        if N is None or not N:
            raise NormalizationError("weighted projections do not sum to a nonzero multiple of the identity")
    terms = []
    for mirror, weight in zip(arr.mirrors, weights):
        coeffs = _term(arr, mirror.covector, arr.field.coerce(weight) / N)
        terms.append((coeffs, linear_form(ring, mirror.covector)))
    return terms


def dk_product(arr, level, weights=None, N=None):
    """The Dunkl-Kohno dual product in the p-chart at the given evaluation level."""
    terms = dk_terms(arr, level.ring, weights, N)
    return ProductStructure(P_CHART, lift_log_tensor(level, terms, arr.n), level)


@dataclass
class WeightFit:
    weights: list
    N: object
    proportional_to_orders: bool
    reported_ratio: object = None

    def render(self):
        return {
            'weights': [render_scalar(w) for w in self.weights],
            'N': render_scalar(self.N),
            'proportional_to_orders': self.proportional_to_orders,
        }


def fit_weights(arr, targets):
    """
    Solve sum_s x_s alpha_j alpha_k h^im conj(alpha)_m / (|alpha|^2 alpha(p)) = c*^i_jk
    for x_s = k_s / N at the sample points of the target products.

    The weights k_s are x_s scaled to a primitive integer vector when the
    x_s are rational (N is the scale), otherwise scaled so the first weight
    equals the first mirror's order.
    """
    if isinstance(targets, ProductStructure):
        targets = [targets]
    field_, n = arr.field, arr.n
    unit_terms = [_term(arr, m.covector, field_.one) for m in arr.mirrors]
    rows, rhs = [], []
    for target in targets:
        point = getattr(target.level, 'point', None)
        if point is None:
            raise NoWeightsError("weight fitting needs targets evaluated at sample points")
        values = [linear_form(target.level.ring, m.covector).evaluate(point) for m in arr.mirrors]
        for i in range(n):
            for j in range(n):
                for k in range(j, n):
                    goal = target.level.val(target[i][j][k])
                    if not goal.is_constant():
                        raise NoWeightsError("target product still depends on unknown constants")
                    rows.append([unit_terms[s][i][j][k] / values[s] for s in range(len(arr.mirrors))])
                    rhs.append(goal.constant_value())
    solution = linear_solve(rows, rhs, field_)
    if not solution.consistent:
        raise NoWeightsError("no weights reproduce the target product")
    if solution.kernel:
        raise NoWeightsError(f"weights are not determined ({len(solution.kernel)} free direction(s))")
    x = solution.particular
    weights, N = _normalize_weights(x, arr.orders, field_)
    ratio = _ratio(weights, arr.orders)
    logger.info("Fitted weights %s with N = %s", [render_scalar(w) for w in weights], render_scalar(N))
    return WeightFit(weights, N, ratio is not None, ratio)


def _as_fraction(value):
    if isinstance(value, NumberFieldElement):
        return value.rational_value() if value.is_rational() else None
    return Fraction(value)


def _normalize_weights(x, orders, field_):
    rational = [_as_fraction(v) for v in x]
    nonzero = [q for q in rational if q]
    if nonzero and all(q is not None for q in rational):
        denominators = lcm(*[q.denominator for q in nonzero])
        numerators = gcd(*[q.numerator for q in nonzero])
        scale = Fraction(denominators, numerators)
        if nonzero[0] < 0:
            scale = -scale
        return [field_.coerce(q * scale) for q in rational], field_.coerce(scale)
    first = next((i for i, v in enumerate(x) if v), None)
    if first is None:
        raise NoWeightsError("all fitted weights vanish")
    scale = field_.coerce(orders[first]) / x[first]
    return [v * scale for v in x], scale


def _ratio(weights, reported):
    """r with weights = r * reported, or None."""
    ratio = None
    for w, r in zip(weights, reported):
        if not r:
            if w:
                return None
            continue
        q = w / r
        if ratio is None:
            ratio = q
        elif q != ratio:
            return None
    return ratio


def compare_weights(fit, reported):
    """A discrepancy is flagged only when the fitted weights are not proportional to the reported ones."""
    ratio = _ratio(fit.weights, reported)
    return {'flagged': ratio is None, 'ratio': render_scalar(ratio) if ratio is not None else None}


# Vee-systems
@dataclass
class VeeReport:
    passed: bool
    witness: str = ''
    planes_checked: int = 0
    failing_planes: list = field(default_factory=list)

    @property
    def plane_passed(self):
        return not self.failing_planes


def vee_form(covectors, field_):
    """g = sum alpha (x) alpha."""
    n = len(covectors[0])
    zero = field_.zero
    g = [[zero] * n for _ in range(n)]
    for alpha in covectors:
        for i in range(n):
            for j in range(n):
                g[i][j] = g[i][j] + alpha[i] * alpha[j]
    return g


def vee_system_check(covectors, field_, form=None, planes=True):
    """
    Flatness of d - lam * sum (d alpha / alpha) (x) pi_alpha for a symbolic lam,
    with pi_alpha the g-orthogonal projection; optionally the plane condition.
    """
    covectors = [[field_.coerce(a) for a in alpha] for alpha in covectors]
    n = len(covectors[0])
    g = form if form is not None else vee_form(covectors, field_)
    if not determinant(PolyMatrix(g)):
        raise DegenerateFormError("the form sum alpha (x) alpha is degenerate")
    g_inv = _inverse(g)
    ring = PolyRing(field_, [f"p{i + 1}" for i in range(n)], (MULTIPLIER,))
    level = make_level(ring)
    terms = []
    for alpha in covectors:
        check = _apply(g_inv, alpha, field_.zero)
        length = _pair(alpha, check, field_.zero)
        if not length:
            raise DegenerateFormError("covector is isotropic for the form")
        coeffs = [[[-check[i] * alpha[j] * alpha[k] / length for k in range(n)] for j in range(n)]
                  for i in range(n)]
        terms.append((coeffs, linear_form(ring, alpha)))
    lam = level.lift(ring.var(MULTIPLIER))
    gamma = [[[entry * lam for entry in row] for row in block] for block in lift_log_tensor(level, terms, n)]
    residual = curvature(Connection(P_CHART, gamma, level))
    report = VeeReport(residual.passed, residual.witness())
    if planes:
        checked, failing = vee_plane_check(covectors, g_inv, field_)
        report.planes_checked = checked
        report.failing_planes = failing
    return report


def _in_span(basis, vector, field_):
    matrix = [[b[i] for b in basis] for i in range(len(vector))]
    return linear_solve(matrix, vector, field_).consistent


def _parallel(v, w):
    n = len(v)
    return all(v[i] * w[j] == v[j] * w[i] for i in range(n) for j in range(i + 1, n))


def vee_plane_check(covectors, g_inv, field_):
    """
    For every plane spanned by two covectors: sum_beta beta(a^) b^ is
    parallel to a^ for each alpha in the plane (a^ = g^-1 alpha).
    Returns (number of planes, failing planes as 1-based index lists).
    """
    zero = field_.zero
    checks = [_apply(g_inv, alpha, zero) for alpha in covectors]
    seen = set()
    failing = []
    for a in range(len(covectors)):
        for b in range(a + 1, len(covectors)):
            if _parallel(covectors[a], covectors[b]):
                continue
            members = tuple(s for s, gamma in enumerate(covectors)
                            if _in_span([covectors[a], covectors[b]], gamma, field_))
            if members in seen:
                continue
            seen.add(members)
            for s in members:
                total = [zero] * len(checks[s])
                for t in members:
                    weight = _pair(covectors[t], checks[s], zero)
                    total = [x + y * weight for x, y in zip(total, checks[t])]
                if not _parallel(total, checks[s]):
                    failing.append([m + 1 for m in members])
                    break
    return len(seen), failing


# Potentials
@dataclass
class LogPotential:
    """F^i = sum_s weight_s * alpha_s(p) ln alpha_s(p) * vector_s^i."""
    terms: list
    n: int

    def render(self, ring):
        out = []
        for i in range(self.n):
            parts = []
            for vector, weight, covector in self.terms:
                coeff = vector[i] * weight
                if not coeff:
                    continue
                form = render_expression(linear_form(ring, covector))
                parts.append(f"({render_scalar(coeff)})*({form})*log({form})")
            out.append(' + '.join(parts) if parts else '0')
        return out


def veselov_potential(arr, weights=None, N=None):
    """(1/N) sum_s k_s / |alpha_s|^2 * alpha_s(p) ln alpha_s(p) * h^im conj(alpha_s)_m."""
    weights = weights if weights is not None else arr.weights
    if not arr.mirrors:
        return LogPotential([], arr.n)
    if N is None:
        _, N = normalization_sum(arr, weights)
        if N is None or not N:
            raise NormalizationError("weighted projections do not sum to a nonzero multiple of the identity")
    terms = []
    for mirror, weight in zip(arr.mirrors, weights):
        vector = [v / arr.norm(mirror.covector) for v in arr.dual_vector(mirror.covector)]
        terms.append((vector, arr.field.coerce(weight) / N, list(mirror.covector)))
    return LogPotential(terms, arr.n)


def hessian_of_logpotential(potential, level):
    """d_j d_k (alpha ln alpha) = alpha_j alpha_k / alpha(p), assembled term by term."""
    n = potential.n
    terms = []
    for vector, weight, covector in potential.terms:
        coeffs = [[[vector[i] * weight * covector[j] * covector[k] for k in range(n)] for j in range(n)]
                  for i in range(n)]
        terms.append((coeffs, linear_form(level.ring, covector)))
    return ProductStructure(P_CHART, lift_log_tensor(level, terms, n), level)


@dataclass
class ScalarLogPotential:
    """F = 1/2 sum alpha(p)^2 ln alpha(p) with the form g = sum alpha (x) alpha."""
    covectors: list
    form: list
    field: object

    def render(self, ring):
        parts = []
        for alpha in self.covectors:
            text = render_expression(linear_form(ring, alpha))
            parts.append(f"1/2*({text})^2*log({text})")
        return ' + '.join(parts) if parts else '0'

    def third_derivatives(self, level):
        """F_ijk = sum alpha_i alpha_j alpha_k / alpha(p) (covariant, [i][j][k])."""
        n = len(self.form)
        terms = []
        for alpha in self.covectors:
            coeffs = [[[alpha[i] * alpha[j] * alpha[k] for k in range(n)] for j in range(n)] for i in range(n)]
            terms.append((coeffs, linear_form(level.ring, alpha)))
        return lift_log_tensor(level, terms, n)

    def dual_product(self, level):
        """c*^i_jk = g^il F_ljk."""
        n = len(self.form)
        g_inv = _inverse(self.form)
        lowered = self.third_derivatives(level)
        comps = [[[None] * n for _ in range(n)] for _ in range(n)]
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    acc = level.const(0)
                    for l in range(n):
                        if g_inv[i][l]:
                            acc = acc + lowered[l][j][k] * g_inv[i][l]
                    comps[i][j][k] = acc
        return ProductStructure(P_CHART, comps, level)


def scalar_wdvv_potential(covectors, field_):
    covectors = [[field_.coerce(a) for a in alpha] for alpha in covectors]
    form = vee_form(covectors, field_)
    if not determinant(PolyMatrix(form)):
        raise DegenerateFormError("the form sum alpha (x) alpha is degenerate")
    return ScalarLogPotential(covectors, form, field_)


# Family corrections
def family_correction(arr, weights):
    """
    Terms of C^i_jk = sum_s k_s alpha_j alpha_k h^im conj(alpha)_m / (|alpha|^2 alpha(p))
    for per-mirror weights with sum k_s pi_s = 0. Mirrors of one order may carry
    different weights when they form several orbits (B2: 1, 1, -1, -1).
    """
    if len(weights) != len(arr.mirrors):
        raise InvalidFamilyError(f"{len(weights)} correction weights for {len(arr.mirrors)} mirrors")
    total, _ = normalization_sum(arr, weights)
    if any(x for row in total for x in row):
        raise InvalidFamilyError("correction weights do not satisfy sum k_s pi_s = 0")
    return [(_term(arr, m.covector, arr.field.coerce(w)), m.covector) for m, w in zip(arr.mirrors, weights)]


def correction_terms(arr, weights, ring):
    """family_correction with the covectors turned into linear forms of ring."""
    return [(coeffs, linear_form(ring, covector)) for coeffs, covector in family_correction(arr, weights)]
