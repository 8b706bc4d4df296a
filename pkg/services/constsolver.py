"""
Free-constant selection for the generalized Saito ansatz.

This module handles:
- ConditionSystem: polynomial equations in the ansatz constants
- Condition collection from residual tensors (symbolic or at sample points)
- Verification of given constant values
- Best-effort solving: linear elimination, univariate roots over the number
  field (sympy factorisation for higher degrees), resultant elimination,
  with an explicit unresolved outcome
"""

import logging
import random
from dataclasses import dataclass, field
from fractions import Fraction

import sympy as sp

from .biflat import (
    P_CHART, Frame, ProductStructure, almost_hydro_check, curvature, dual_connection_standard,
    dual_product_from_invariants, family_dual_connection, lift_log_tensor, make_level,
    natural_connection, natural_product_from_dual, product_compatibility, unit_field
)
from .errors import ConfigurationError, DivisibilityError, InvariantViolation
from .exprparse import _squarefree_split, render_expression, render_scalar
from .multipoly import MultiPolynomial, PolyRing, random_point
from .numberfield import RATIONALS, NumberFieldElement

logger = logging.getLogger(__name__)

DUAL_FLATNESS = 'dual_flatness'
COMPATIBILITY = 'compatibility'
ALMOST_HYDRO = 'almost_hydro'
CONDITION_CHECKS = (DUAL_FLATNESS, COMPATIBILITY, ALMOST_HYDRO)

SOLVER_MODES = ('solve', 'verify')
MULTIPLIER = 'lam'
MAX_RESAMPLES = 50
MAX_RESULTANTS = 6


class OutsideExtension(Exception):
    """A root or coefficient is not expressible in the declared field."""


# Systems
class ConditionSystem:
    """Equations (polynomials in the unknown constants) that must all vanish."""

    def __init__(self, unknowns, equations, field=None, origins=None):
        self.unknowns = list(unknowns)
        if field is None:
            field = equations[0].ring.field if equations else RATIONALS
        self.field = field
        self.ring = PolyRing(field, (), self.unknowns)
        origins = list(origins) if origins is not None else [None] * len(equations)
        self.equations = []
        self.origins = []
        seen = set()
        for eq, origin in zip(equations, origins):
            eq = _normalize(eq.to_ring(self.ring))
            if not eq or eq in seen:
                continue
            seen.add(eq)
            self.equations.append(eq)
            self.origins.append(origin)

    def __len__(self):
        return len(self.equations)

    @property
    def is_empty(self):
        return not self.equations

    def merge(self, other):
        unknowns = self.unknowns + [u for u in other.unknowns if u not in self.unknowns]
        ring = PolyRing(self.field, (), unknowns)
        return ConditionSystem(unknowns,
                               [e.to_ring(ring) for e in self.equations + other.equations],
                               self.field, self.origins + other.origins)

    def render(self, limit=None):
        eqs = self.equations if limit is None else self.equations[:limit]
        return [render_expression(e) for e in eqs]


def _normalize(eq):
    """Scale so the leading coefficient (graded order) is 1."""
    if not eq:
        return eq
    key = max(eq.terms, key=lambda k: (sum(k), k))
    return eq / eq.terms[key]


# Condition collection
def with_multiplier(ansatz_ring, invariants):
    """Move the invariants into a ring that also carries the family multiplier lam."""
    params = list(ansatz_ring.params)
    if MULTIPLIER not in params:
        params.append(MULTIPLIER)
    ring = ansatz_ring.with_params(params)
    return ring, [u.to_ring(ring) for u in invariants]


def standard_structures(frame, degrees):
    """Dual product from the invariants, natural product, both connections."""
    cstar = dual_product_from_invariants(frame, degrees)
    e = unit_field(frame)
    return {
        'cstar': cstar,
        'e': e,
        'prod': natural_product_from_dual(cstar, e),
        'nabla1': natural_connection(frame),
        'nabla2': dual_connection_standard(cstar),
    }


def family_structures(frame, log_terms, correction_terms, lam=None):
    """
    Dunkl-Kohno dual product, natural product from the ansatz unit and
    nabla2 = -c* + lam * C. lam defaults to the ring parameter 'lam'.
    """
    level, n = frame.level, frame.n
    cstar = ProductStructure(P_CHART, lift_log_tensor(level, log_terms, n), level)
    correction = lift_log_tensor(level, correction_terms, n)
    if lam is None:
        lam = level.ring.var(MULTIPLIER)
    elif isinstance(lam, MultiPolynomial):
        lam = lam.to_ring(level.ring)
    e = unit_field(frame)
    return {
        'cstar': cstar,
        'e': e,
        'prod': natural_product_from_dual(cstar, e),
        'nabla1': natural_connection(frame),
        'nabla2': family_dual_connection(cstar, correction, lam),
        'correction': correction,
    }


def condition_residuals(structures, checks):
    residuals = []
    for check in checks:
        if check == DUAL_FLATNESS:
            residuals.append((check, curvature(structures['nabla2'])))
        elif check == COMPATIBILITY:
            residuals.append((check, product_compatibility(structures['nabla1'], structures['prod'])))
        elif check == ALMOST_HYDRO:
            residuals.append((check, almost_hydro_check(structures['nabla1'], structures['nabla2'],
                                                        structures['prod'])))
        else:
            raise ConfigurationError(f"unknown condition check {check!r}")
    return residuals


def sample_levels(ring, count, seed, build):
    """
    Yield (point, build(level)) for count random rational points.

    Points where build divides by zero (det J or a mirror vanishes) are
    replaced by fresh ones from the same generator.
    """
    rng = random.Random(seed)
    produced = 0
    failures = 0
    while produced < count:
        point = random_point(rng, ring.ncoords)
        try:
            result = build(make_level(ring, point))
        except ZeroDivisionError:
            failures += 1
            if failures > MAX_RESAMPLES:
                raise InvariantViolation(f"no admissible sample point after {failures} attempts")
            logger.debug("Resampling: point %s is singular", point)
            continue
        produced += 1
        yield point, result


def collect_conditions(spec, ansatz, checks=CONDITION_CHECKS, level='symbolic', points=8, seed=0,
                       builder=None, unknowns=None):
    """
    Extract the polynomial equations in the ansatz constants that make the
    selected residual tensors vanish.

    builder(frame) returns the structures dict (standard_structures by
    default); invariants are taken from ansatz.invariants in ansatz.ring.
    """
    ring = ansatz.ring
    invariants = ansatz.invariants
    if builder is None:
        def builder(frame):
            return standard_structures(frame, spec.degrees)
    unknowns = list(unknowns if unknowns is not None else ring.params)
    equations, origins = [], []

    def gather(lvl):
        frame = Frame(lvl, invariants)
        found = []
        for check, residual in condition_residuals(builder(frame), checks):
            found.extend((check, eq) for eq in residual.conditions())
        return found

    if level == 'symbolic':
        logger.info("Collecting %s conditions for %s symbolically", ', '.join(checks), spec.name)
        batches = [gather(make_level(ring))]
    elif level == 'sampled':
        logger.info("Collecting %s conditions for %s at %d point(s), seed %s",
                    ', '.join(checks), spec.name, points, seed)
        batches = [found for _, found in sample_levels(ring, points, seed, gather)]
    else:
        raise ConfigurationError(f"unknown verification level {level!r}")
    for batch in batches:
        for check, eq in batch:
            if not eq.coord_free():
                raise InvariantViolation(f"{check} condition still depends on the coordinates")
            equations.append(eq)
            origins.append(check)
    system = ConditionSystem(unknowns, equations, spec.field, origins)
    logger.info("Condition system for %s: %d equation(s) in %s", spec.name, len(system),
                ', '.join(unknowns) or 'no unknowns')
    return system


def sample_flatness_conditions(spec, ansatz, points=4, seed=0):
    """Dual-flatness conditions imposed at a few random points only."""
    return collect_conditions(spec, ansatz, (DUAL_FLATNESS,), level='sampled', points=points, seed=seed)


# Verification
@dataclass
class VerificationResult:
    passed: bool
    witnesses: list = field(default_factory=list)
    checked: int = 0
    unassigned: list = field(default_factory=list)


def _assign(system, values):
    """Substitution map for values given as scalars or polynomials (in any ring sharing names)."""
    mapping = {}
    for name, value in values.items():
        if name not in system.ring._index:
            continue
        if isinstance(value, MultiPolynomial):
            mapping[name] = value.to_ring(system.ring)
        else:
            mapping[name] = system.ring.const(system.field.coerce(value))
    return mapping


def verify_constants(system, values, limit=3):
    """Substitute values and test exact vanishing of every equation."""
    mapping = _assign(system, values)
    unassigned = [u for u in system.unknowns if u not in mapping]
    nonzero = []
    for eq, origin in zip(system.equations, system.origins):
        residue = eq.substitute(mapping) if mapping else eq
        if residue:
            nonzero.append((origin, residue))
    witnesses = [f"{origin or 'condition'}: {render_expression(residue)}" for origin, residue in nonzero[:limit]]
    if len(nonzero) > limit:
        witnesses.append(f"... {len(nonzero)} nonzero equation(s) in total")
    return VerificationResult(not nonzero, witnesses, len(system.equations), unassigned)


# Solving
@dataclass
class SolveResult:
    unknowns: list
    solutions: list = field(default_factory=list)
    unresolved: list = field(default_factory=list)
    free: list = field(default_factory=list)

    @property
    def status(self):
        if self.unresolved:
            return 'unresolved'
        return 'solved' if self.solutions else 'inconsistent'

    @property
    def unique(self):
        return self.solutions[0] if len(self.solutions) == 1 and not self.unresolved else None


def solve_constants(system, nonzero=(), free=()):
    """
    Solve by elimination and univariate root finding.

    nonzero unknowns never take the value 0 and their monomial factors are
    divided out of every equation. free unknowns stay symbolic; solutions
    then map the other unknowns to polynomials in them.
    """
    solver = _Solver(system, set(nonzero), set(free))
    branches = solver.branch(list(system.equations), {})
    result = SolveResult(list(system.unknowns), free=list(free))
    seen = set()
    for assignment, leftover in branches:
        if leftover:
            for eq in leftover:
                if eq not in result.unresolved:
                    result.unresolved.append(eq)
            continue
        solution = solver.back_substitute(assignment)
        key = tuple(sorted((k, str(v)) for k, v in solution.items()))
        if key not in seen:
            seen.add(key)
            result.solutions.append(solution)
    result.solutions.sort(key=lambda s: [str(s.get(u)) for u in system.unknowns])
    logger.info("Solver: %d solution(s), %d unresolved equation(s) (%s)",
                len(result.solutions), len(result.unresolved), result.status)
    return result


class _Solver:

    def __init__(self, system, nonzero, free):
        self.system = system
        self.ring = system.ring
        self.field = system.field
        self.nonzero = nonzero
        self.free = free
        self.resultants = 0

    # Normal forms
    def clean(self, equations):
        """Strip nonzero monomial factors, drop zeros, dedupe; None on a nonzero constant."""
        out, seen = [], set()
        for eq in equations:
            eq = self.strip_nonzero(eq)
            if not eq:
                continue
            if eq.is_constant():
                return None
            eq = _normalize(eq)
            if eq not in seen:
                seen.add(eq)
                out.append(eq)
        return out

    def strip_nonzero(self, eq):
        if not eq or not self.nonzero:
            return eq
        shift = [0] * self.ring.nvars
        for name in self.nonzero:
            i = self.ring.index(name)
            shift[i] = min(key[i] for key in eq.terms)
        if not any(shift):
            return eq
        return MultiPolynomial(self.ring, {tuple(a - b for a, b in zip(k, shift)): v
                                           for k, v in eq.terms.items()})

    def unknowns_of(self, eq):
        return [self.ring.names[i] for i in sorted(eq.variables_used())]

    # Search
    def branch(self, equations, assignment):
        equations = self.clean(equations)
        if equations is None:
            return []
        if not equations:
            return [(assignment, [])]
        step = self.linear_step(equations)
        if step is not None:
            name, value = step
            return self.descend(equations, assignment, name, value)
        step = self.univariate_step(equations)
        if step is not None:
            name, roots, eq = step
            if roots is None:
                return [(assignment, equations)]
            out = []
            for root in roots:
                out.extend(self.descend(equations, assignment, name, self.ring.const(root)))
            return out
        resultant = self.resultant_step(equations)
        if resultant is not None:
            return self.branch(equations + [resultant], assignment)
        return [(assignment, equations)]

    def descend(self, equations, assignment, name, value):
        if name in self.nonzero and not value:
            return []
        logger.debug("Solver: %s = %s", name, value)
        substituted = [eq.substitute({name: value}) for eq in equations]
        new = dict(assignment)
        new[name] = value
        return self.branch(substituted, new)

    def linear_step(self, equations):
        """An unknown of degree 1 whose coefficient is constant (or divides the rest exactly)."""
        best = None
        for eq in equations:
            for name in reversed(self.unknowns_of(eq)):
                if name in self.free or eq.degree_in(name) != 1:
                    continue
                coeff = eq.partial(name)
                rest = eq.substitute({name: self.ring.zero()})
                if coeff.is_constant():
                    candidate = (name, -rest / coeff.constant_value())
                elif self.free_only(coeff):
                    try:
                        candidate = (name, -rest.exact_divide(coeff))
                    except DivisibilityError:
                        continue
                else:
                    continue
                rank = (self.ring.index(name), -len(eq))
                if best is None or rank > best[0]:
                    best = (rank, candidate)
                break
        return best[1] if best else None

    def free_only(self, poly):
        return all(self.ring.names[i] in self.free for i in poly.variables_used())

    def univariate_step(self, equations):
        candidates = []
        for eq in equations:
            names = self.unknowns_of(eq)
            if len(names) == 1 and names[0] not in self.free:
                candidates.append((eq.degree_in(names[0]), names[0], eq))
        if not candidates:
            return None
        candidates.sort(key=lambda c: (c[0], -self.ring.index(c[1])))
        degree, name, eq = candidates[0]
        try:
            roots = univariate_roots(eq, name, self.field)
        except OutsideExtension as e:
            logger.info("Solver: roots of %s lie outside the field (%s)", render_expression(eq), e)
            return name, None, eq
        return name, roots, eq

    def resultant_step(self, equations):
        """Eliminate one unknown from a pair of equations with sympy.resultant."""
        if self.resultants >= MAX_RESULTANTS:
            return None
        symbols = {name: sp.Symbol(name) for name in self.ring.names}
        for a_index, a in enumerate(equations):
            for b in equations[a_index + 1:]:
                shared = [n for n in self.unknowns_of(a) if n in self.unknowns_of(b) and n not in self.free]
                if not shared or len(set(self.unknowns_of(a)) | set(self.unknowns_of(b))) < 2:
                    continue
                name = shared[-1]
                try:
                    expr_a = to_sympy(a, symbols)
                    expr_b = to_sympy(b, symbols)
                    res = sp.resultant(expr_a, expr_b, symbols[name])
                    poly = from_sympy_poly(sp.expand(res), self.ring, symbols, self.field)
                except OutsideExtension:
                    continue
                poly = self.strip_nonzero(poly)
                if poly and not poly.is_constant() and _normalize(poly) not in equations:
                    self.resultants += 1
                    logger.debug("Solver: resultant in %s eliminates %s", self.unknowns_of(poly), name)
                    return poly
        return None

    def back_substitute(self, assignment):
        """Resolve chained eliminations: later values may mention earlier unknowns."""
        solution = {}
        for name in self.system.unknowns:
            if name in self.free:
                continue
            if name not in assignment:
                continue
            value = assignment[name]
            for _ in range(len(assignment)):
                pending = {n: assignment[n] for n in self.unknowns_of(value) if n in assignment}
                if not pending:
                    break
                value = value.substitute(pending)
            solution[name] = value.constant_value() if value.is_constant() else value
        return solution


# Univariate roots
def univariate_roots(eq, name, field):
    """Roots in field of a polynomial in one unknown; OutsideExtension when some root is not in field."""
    i = eq.ring.index(name)
    degree = eq.degree_in(name)
    coeffs = [field.zero] * (degree + 1)
    for key, value in eq.terms.items():
        coeffs[key[i]] = value
    if degree == 1:
        return [-coeffs[0] / coeffs[1]]
    if degree == 2:
        a, b, c = coeffs[2], coeffs[1], coeffs[0]
        disc = b * b - a * c * 4
        root = field_sqrt(disc, field)
        if root is not None:
            roots = [(-b + root) / (a * 2), (-b - root) / (a * 2)]
            return roots if roots[0] != roots[1] else roots[:1]
    return sympy_roots(eq, name, field)


def field_sqrt(value, field):
    """A square root of value inside field, or None (tries rationals and declared sqrt/I generators)."""
    if isinstance(value, NumberFieldElement):
        if not value.is_rational():
            return None
        value = value.rational_value()
    value = Fraction(value)
    if not value:
        return field.zero
    scale = field.one
    if value < 0:
        if 'I' not in field.names:
            return None
        scale = field.gen('I')
        value = -value
    s, f = _squarefree_split(value.numerator * value.denominator)
    root = Fraction(s, value.denominator)
    if f == 1:
        return scale * root
    name = f"sqrt({f})"
    if name not in field.names:
        return None
    return scale * field.gen(name) * root


def _generator_symbol(name):
    if name == 'I':
        return sp.I
    if name.startswith('sqrt(') and name.endswith(')'):
        return sp.sqrt(int(name[5:-1]))
    raise OutsideExtension(f"generator {name} has no radical form")


def scalar_to_sympy(value):
    if isinstance(value, NumberFieldElement):
        total = sp.Integer(0)
        for key, q in value.coords.items():
            term = sp.Rational(q.numerator, q.denominator)
            for name, e in zip(value.field.names, key):
                if e:
                    term = term * _generator_symbol(name) ** e
            total = total + term
        return total
    value = Fraction(value)
    return sp.Rational(value.numerator, value.denominator)


def to_sympy(poly, symbols):
    total = sp.Integer(0)
    for key, value in poly.terms.items():
        term = scalar_to_sympy(value)
        for name, e in zip(poly.ring.names, key):
            if e:
                term = term * symbols[name] ** e
        total = total + term
    return total


def scalar_from_sympy(expr, field):
    """Convert a radical expression in I and square roots back to a field element."""
    expr = sp.expand(expr)
    if expr.is_Rational:
        return field.coerce(Fraction(int(expr.p), int(expr.q)))
    if expr == sp.I:
        if 'I' not in field.names:
            raise OutsideExtension("I is not in the field")
        return field.gen('I')
    if expr.is_Add:
        total = field.zero
        for arg in expr.args:
            total = total + scalar_from_sympy(arg, field)
        return total
    if expr.is_Mul:
        total = field.one
        for arg in expr.args:
            total = total * scalar_from_sympy(arg, field)
        return total
    if expr.is_Pow:
        base, exp = expr.args
        if exp.is_Integer:
            value = scalar_from_sympy(base, field)
            return value ** int(exp) if exp >= 0 else (1 / value) ** int(-exp)
        if base.is_Rational and exp == sp.Rational(1, 2):
            root = field_sqrt(Fraction(int(base.p), int(base.q)), field)
            if root is None:
                raise OutsideExtension(f"sqrt({base}) is not in the field")
            return root
        if base.is_Rational and exp == sp.Rational(-1, 2):
            root = field_sqrt(Fraction(int(base.p), int(base.q)), field)
            if root is None:
                raise OutsideExtension(f"sqrt({base}) is not in the field")
            return 1 / root
    raise OutsideExtension(f"{expr} is not a radical in the field")


def from_sympy_poly(expr, ring, symbols, field):
    gens = [symbols[name] for name in ring.names]
    poly = sp.Poly(expr, *gens) if gens else None
    if poly is None:
        return ring.const(scalar_from_sympy(expr, field))
    terms = {}
    for monom, coeff in poly.terms():
        terms[tuple(monom)] = field.coerce(scalar_from_sympy(coeff, field))
    return MultiPolynomial(ring, terms)


def sympy_roots(eq, name, field):
    """Linear factors over Q(I, sqrt(k), ...) via sympy.factor_list with an extension."""
    x = sp.Symbol(name)
    i = eq.ring.index(name)
    expr = sp.Integer(0)
    for key, value in eq.terms.items():
        expr = expr + scalar_to_sympy(value) * x ** key[i]
    extension = [_generator_symbol(g) for g in field.names]
    if extension:
        _, factors = sp.factor_list(expr, x, extension=extension)
    else:
        _, factors = sp.factor_list(expr, x)
    roots = []
    for factor, _ in factors:
        poly = sp.Poly(factor, x)
        if poly.degree() != 1:
            raise OutsideExtension(f"irreducible factor {factor} of degree {poly.degree()}")
        a, b = poly.all_coeffs()
        root = scalar_from_sympy(sp.radsimp(-b / a), field)
        if root not in roots:
            roots.append(root)
    return roots


# Reporting helpers
def render_solution(solution):
    out = {}
    for name, value in solution.items():
        out[name] = render_expression(value) if isinstance(value, MultiPolynomial) else render_scalar(value)
    return out

