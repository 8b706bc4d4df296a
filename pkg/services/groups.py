"""
Reflection group registry.

This module handles:
- GroupSpec: everything a group data file declares, parsed and validated
- Registry lookup by name (with integer parameters such as m)
- Generalized Saito ansatz construction and instantiation
- Structural checks: det J factorization over the mirrors, Euler isobarity
"""

import logging
import os
import re
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import (
    ConfigurationError, DivisibilityError, ExpressionSyntaxError, FactorizationMismatchError,
    GroupFileError, MirrorClosureError, SingularMatrixError, UnknownGroupError
)
from .exprparse import (
    LOOP_RE, ParseContext, parse_expression, parse_group_text, parse_integer,
    parse_scalar, scalar_ring, split_top_level
)
from .multipoly import (
    MultiPolynomial, PolyMatrix, PolyRing, determinant, jacobian, matrix_inverse, weighted_monomials
)
from .numberfield import (
    RATIONALS, AlgebraicGenerator, NumberField, NumberFieldElement, conjugate_scalar,
    cyclotomic_polynomial, rational_generator
)

logger = logging.getLogger(__name__)

DEFAULT_DATA_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'data', 'groups')
FAMILY_NAME_RE = re.compile(r'^G\((\d+|m),1,(\d+)\)$')
CLOSURE_LIMIT = 400


@dataclass
class Mirror:
    """Reflecting hyperplane ker(alpha) with its reflection order."""
    covector: list
    order: int
    weight: object = None

    def __post_init__(self):
        if self.weight is None:
            self.weight = self.order


@dataclass
class AnsatzInvariants:
    """u^i(p) with coefficients polynomial in the free constants."""
    ring: PolyRing
    invariants: list
    constants: list

    @property
    def rank(self):
        return len(self.invariants)


@dataclass
class WeightRule:
    """weight @ a..b (1-based mirror positions) or weight @ order k."""
    weight: object
    first: int = None
    last: int = None
    order: int = None

    def matches(self, position, mirror):
        if self.order is not None:
            return mirror.order == self.order
        return self.first <= position <= self.last


def resolve_weights(rules, mirrors):
    """Per-mirror weights from rules; later rules win, [] when there are no rules."""
    if not rules:
        return []
    weights = [None] * len(mirrors)
    for rule in rules:
        if rule.order is None and rule.last > len(mirrors):
            raise ConfigurationError(f"mirror range {rule.first}..{rule.last} outside 1..{len(mirrors)}")
        for s, mirror in enumerate(mirrors):
            if rule.matches(s + 1, mirror):
                weights[s] = rule.weight
    if any(w is None for w in weights):
        raise ConfigurationError("weight rules do not cover every mirror")
    return weights


@dataclass
class FamilySpec:
    lam: object = None
    relations: dict = field(default_factory=dict)
    correction: list = field(default_factory=list)
    dual_weights: list = field(default_factory=list)
    frobenius_at: dict = field(default_factory=dict)
    potentials: dict = field(default_factory=dict)
    partner: str = None

    def correction_for(self, mirrors):
        return resolve_weights(self.correction, mirrors)

    def dual_weights_for(self, mirrors):
        return resolve_weights(self.dual_weights, mirrors)


@dataclass
class MirrorClosure:
    """Close the declared mirrors under their own unitary reflections."""
    roots: dict = field(default_factory=dict)
    limit: int = CLOSURE_LIMIT


@dataclass
class PencilSpec:
    seed: str = 'euclidean'
    metric: list = None
    constants: dict = field(default_factory=dict)
    eta: list = None
    F: object = None


@dataclass
class ReportedData:
    """Printed table values kept as metadata; computations never read them as truth."""
    M: int = None
    N: object = None
    kappa: str = None
    constants: dict = field(default_factory=dict)
    frobenius: str = 'unknown'
    potentials: dict = field(default_factory=dict)
    eta: list = None
    F: object = None
    notes: str = None


@dataclass
class GroupSpec:
    name: str
    rank: int
    degrees: list
    field: NumberField
    p_ring: PolyRing
    u_ring: PolyRing
    base_invariants: list
    ansatz: AnsatzInvariants
    declared_mirrors: list
    hermitian: list
    reported: ReportedData
    family: FamilySpec = None
    pencil: PencilSpec = None
    params: dict = field(default_factory=dict)
    well_generated: bool = True
    heavy: bool = False
    modes: list = field(default_factory=list)
    description: str = ''
    path: str = None
    closure: MirrorClosure = None
    _closed: list = field(default=None, repr=False, compare=False)

    @property
    def mirrors(self):
        """Declared mirrors, or their closure (computed once) when the file asks for it."""
        if self.closure is None:
            return self.declared_mirrors
        if self._closed is None:
            closed = close_mirrors(self.declared_mirrors, self.hermitian, self.field,
                                   self.closure.roots, self.closure.limit)
            if self.reported.M is not None and len(closed) != self.reported.M:
                raise MirrorClosureError(f"closure of the {len(self.declared_mirrors)} declared mirrors "
                                         f"gives {len(closed)} mirrors, expected M = {self.reported.M}")
            logger.info("Closed %d declared mirrors of %s to %d", len(self.declared_mirrors), self.name, len(closed))
            self._closed = closed
        return self._closed

    @property
    def mirror_count(self):
        if self.closure is not None and self._closed is None:
            return self.reported.M
        return len(self.mirrors)

    @property
    def variables(self):
        return list(self.p_ring.coords)

    @property
    def constants(self):
        return list(self.ansatz.constants)

    def scalar_context(self, constants=(), bindings=None):
        ring = PolyRing(self.field, (), constants)
        return ParseContext(ring, bindings=dict(self.params, **(bindings or {})))

    def u_context(self, constants=()):
        return ParseContext(self.u_ring.with_params(constants), bindings=self.params)

    def parse_u(self, text, constants=()):
        return parse_expression(text, self.u_context(constants))

    @classmethod
    def from_document(cls, document, params):
        return GroupBuilder(document, params).build()


# Building a spec from a parsed document
class GroupBuilder:

    def __init__(self, document, params):
        self.doc = document
        self.params = {k: int(v) for k, v in (params or {}).items()}

    def fail(self, message, section):
        raise GroupFileError(message, section=section, path=self.doc.path)

    def integer(self, text, section, bindings=None):
        try:
            return parse_integer(text, dict(self.params, **(bindings or {})))
        except ExpressionSyntaxError as e:
            self.fail(f"bad integer {text!r}: {e}", section)

    def build(self):
        meta = self.doc.mapping('meta')
        if 'name' not in meta or 'rank' not in meta:
            self.fail("name and rank are required", 'meta')
        declared = [p.strip() for p in meta.get('parameters', '').split(',') if p.strip()]
        missing = [p for p in declared if p not in self.params]
        if missing:
            raise ConfigurationError(f"group {meta['name']} needs parameter(s) {', '.join(missing)}")
        for p, value in self.params.items():
            if p in declared and value < 2:
                raise ConfigurationError(f"parameter {p} must be at least 2, got {value}")
        name = meta['name']
        for p in declared:
            name = re.sub(rf'\b{p}\b', str(self.params[p]), name)
        rank = self.integer(meta['rank'], 'meta')
        degrees = [self.integer(d, 'meta') for d in split_top_level(meta.get('degrees', ''))]
        if len(degrees) != rank:
            self.fail(f"{len(degrees)} degrees for rank {rank}", 'meta')
        well_generated = meta.get('well_generated', 'yes').lower() == 'yes'
        # equal degrees only occur for groups that are not well generated (G7)
        if any(b < a or (b == a and well_generated) for a, b in zip(degrees, degrees[1:])):
            self.fail(f"degrees {degrees} are not strictly increasing", 'meta')
        coords = [v.strip() for v in meta.get('variables', '').split(',') if v.strip()]
        coords = coords or [f"p{i + 1}" for i in range(rank)]

        number_field = self.build_field()
        p_ring = PolyRing(number_field, coords)
        u_ring = PolyRing(number_field, [f"u{i + 1}" for i in range(rank)])
        aux = self.build_auxiliary(p_ring)
        base = self.build_invariants(p_ring, aux, degrees)
        ansatz = self.build_ansatz_section(p_ring, aux, base, degrees)
        mirrors, closure = self.build_mirrors(number_field, rank, aux)
        hermitian = self.build_hermitian(number_field, rank)
        spec = GroupSpec(
            name=name, rank=rank, degrees=degrees, field=number_field, p_ring=p_ring,
            u_ring=u_ring, base_invariants=base, ansatz=ansatz, declared_mirrors=mirrors,
            hermitian=hermitian, reported=ReportedData(), params=dict(self.params),
            well_generated=well_generated,
            heavy=meta.get('heavy', 'no').lower() == 'yes',
            modes=[m.strip() for m in meta.get('modes', 'standard').split(',') if m.strip()],
            description=meta.get('description', ''), path=self.doc.path, closure=closure)
        spec.reported = self.build_reported(spec)
        if self.doc.has('family'):
            spec.family = self.build_family(spec)
        if self.doc.has('pencil'):
            spec.pencil = self.build_pencil(spec)
        if closure is None and spec.reported.M is not None and mirrors and spec.reported.M != len(mirrors):
            self.fail(f"{len(mirrors)} mirrors listed but M = {spec.reported.M}", 'mirrors')
        if closure is not None and spec.reported.M is None:
            self.fail("mirror closure needs M in [reported]", 'mirrors')
        logger.debug("Loaded group %s: rank %d, degrees %s, %d mirrors", name, rank, degrees, len(mirrors))
        return spec

    # Sections
    def build_field(self):
        generators, conjugations = [], {}
        for entry in self.doc.section('generators'):
            value, _, conj = entry.value.partition(';')
            conj = conj.strip()
            if conj:
                if not conj.startswith('conj'):
                    self.fail(f"unexpected option {conj!r} for {entry.key}", 'generators')
                conjugations[entry.key] = conj.split('=', 1)[1].strip()
            k = len(generators)
            sub = NumberField(generators)
            value = value.strip()
            match = re.match(r'^cyclotomic\((.+)\)$', value)
            try:
                if match:
                    m = parse_integer(match.group(1), self.params, line=entry.line)
                    gen = rational_generator(entry.key, cyclotomic_polynomial(m), k,
                                             conjugation_source=conjugations.get(entry.key))
                else:
                    poly = parse_expression(value, ParseContext(PolyRing(sub, ('z',)), bindings=self.params),
                                            line=entry.line)
                    coeffs = []
                    for j in range(poly.degree_in('z') + 1):
                        coeff = poly.terms.get((j,), None)
                        coeffs.append(_coords(coeff, k))
                    gen = AlgebraicGenerator(entry.key, coeffs, conjugations.get(entry.key))
            except (ExpressionSyntaxError, ConfigurationError) as e:
                self.fail(f"generator {entry.key}: {e}", 'generators')
            generators.append(gen)
        number_field = NumberField(generators) if generators else RATIONALS
        if conjugations:
            context = ParseContext(scalar_ring(number_field), bindings=self.params)
            for gen_name, text in conjugations.items():
                try:
                    number_field.set_conjugation(gen_name, parse_scalar(text, context))
                except ExpressionSyntaxError as e:
                    self.fail(f"conjugation of {gen_name}: {e}", 'generators')
            try:
                number_field.validate_conjugation()
            except ConfigurationError as e:
                self.fail(str(e), 'generators')
        return number_field

    def build_auxiliary(self, p_ring):
        aux = {}
        for entry in self.doc.section('auxiliary'):
            context = ParseContext(p_ring, constants=aux, bindings=self.params)
            try:
                value = parse_expression(entry.value, context, line=entry.line)
            except ExpressionSyntaxError as e:
                self.fail(f"{entry.key}: {e}", 'auxiliary')
            aux[entry.key] = value.constant_value() if value.is_constant() else value
        return aux

    def build_invariants(self, p_ring, aux, degrees):
        entries = self.doc.mapping('invariants')
        context = ParseContext(p_ring, constants=aux, bindings=self.params)
        base = []
        for i, d in enumerate(degrees):
            key = f"U{i + 1}"
            if key not in entries:
                self.fail(f"missing {key}", 'invariants')
            try:
                poly = parse_expression(entries[key], context)
            except ExpressionSyntaxError as e:
                self.fail(f"{key}: {e}", 'invariants')
            parts = poly.homogeneous_components()
            if list(parts) != [d]:
                self.fail(f"{key} is not homogeneous of degree {d} (found {sorted(parts)})", 'invariants')
            base.append(poly)
        if len(entries) != len(degrees):
            self.fail(f"{len(entries)} invariants for rank {len(degrees)}", 'invariants')
        return base

    def build_ansatz_section(self, p_ring, aux, base, degrees):
        entries = self.doc.mapping('ansatz')
        if not entries:
            return build_ansatz_from(p_ring, base, degrees)
        constants = [c.strip() for c in entries.get('constants', '').split(',') if c.strip()]
        ring = p_ring.with_params(constants)
        named = dict(aux)
        named.update({f"U{i + 1}": b for i, b in enumerate(base)})
        context = ParseContext(ring, constants=named, bindings=self.params)
        invariants = []
        for i, b in enumerate(base):
            text = entries.get(f"u{i + 1}")
            if text is None:
                invariants.append(b.to_ring(ring))
                continue
            try:
                poly = parse_expression(text, context)
            except ExpressionSyntaxError as e:
                self.fail(f"u{i + 1}: {e}", 'ansatz')
            if list(poly.homogeneous_components()) != [degrees[i]]:
                self.fail(f"u{i + 1} is not homogeneous of degree {degrees[i]}", 'ansatz')
            invariants.append(poly)
        return AnsatzInvariants(ring, invariants, constants)

    def build_mirrors(self, number_field, rank, aux):
        """Mirror lines, plus a MirrorClosure when a 'closure' line is present."""
        mirrors = []
        closure = None
        scalars = {k: v for k, v in aux.items() if not isinstance(v, MultiPolynomial)}
        for entry in self.doc.section('mirrors'):
            if entry.value.split(' ', 1)[0] == 'closure':
                closure = closure or MirrorClosure()
                rest = entry.value[len('closure'):].strip()
                if rest:
                    order, root = self.closure_root(rest, number_field, scalars)
                    closure.roots[order] = root
                continue
            loop = LOOP_RE.match(entry.value)
            if loop:
                var, start, stop, rest = loop.groups()
                first = self.integer(start, 'mirrors')
                last = self.integer(stop, 'mirrors')
                for r in range(first, last + 1):
                    mirrors.append(self.mirror_line(rest, number_field, rank, scalars, {var: r}))
            else:
                mirrors.append(self.mirror_line(entry.value, number_field, rank, scalars, {}))
        if closure is not None:
            if not mirrors:
                self.fail("closure needs at least one declared mirror", 'mirrors')
            for order in sorted({m.order for m in mirrors} - set(closure.roots)):
                if order != 2:
                    self.fail(f"closure needs a primitive root for order {order} ('closure {order} : root')",
                              'mirrors')
        return mirrors, closure

    def closure_root(self, text, number_field, scalars):
        """'5 : zeta' -> (5, zeta) after checking zeta is a primitive 5th root of unity."""
        order_text, sep, root_text = text.partition(':')
        if not sep:
            self.fail(f"closure line {text!r} needs 'closure order : root'", 'mirrors')
        order = self.integer(order_text, 'mirrors')
        context = ParseContext(scalar_ring(number_field), constants=scalars, bindings=self.params)
        try:
            root = number_field.coerce(parse_scalar(root_text.strip(), context))
        except ExpressionSyntaxError as e:
            self.fail(f"closure root {root_text.strip()!r}: {e}", 'mirrors')
        if order < 2 or not is_primitive_root(root, order, number_field):
            self.fail(f"{root_text.strip()!r} is not a primitive root of unity of order {order}", 'mirrors')
        return order, root

    def mirror_line(self, text, number_field, rank, scalars, bindings):
        order_text, sep, comps = text.partition(':')
        if not sep:
            self.fail(f"mirror line {text!r} needs 'order : components'", 'mirrors')
        order = self.integer(order_text, 'mirrors', bindings)
        context = ParseContext(scalar_ring(number_field), constants=scalars,
                               bindings=dict(self.params, **bindings))
        try:
            covector = [parse_scalar(c, context) for c in split_top_level(comps)]
        except ExpressionSyntaxError as e:
            self.fail(f"mirror {text!r}: {e}", 'mirrors')
        if len(covector) != rank:
            self.fail(f"mirror {text!r} has {len(covector)} components for rank {rank}", 'mirrors')
        if not any(covector):
            self.fail(f"mirror {text!r} is the zero covector", 'mirrors')
        return Mirror([number_field.coerce(x) for x in covector], order)

    def build_hermitian(self, number_field, rank):
        entries = self.doc.section('hermitian')
        zero = number_field.zero
        diagonal = [number_field.one] * rank
        context = ParseContext(scalar_ring(number_field), bindings=self.params)
        for entry in entries:
            if entry.key == 'matrix':
                rows = parse_rows(entry.value, context)
                if len(rows) != rank or any(len(row) != rank for row in rows):
                    self.fail(f"matrix must be {rank} x {rank}", 'hermitian')
                return [[number_field.coerce(x) for x in row] for row in rows]
            if entry.key == 'diagonal':
                diagonal = [parse_scalar(x, context) for x in split_top_level(entry.value)]
                if len(diagonal) != rank:
                    self.fail(f"diagonal has {len(diagonal)} entries for rank {rank}", 'hermitian')
            elif entry.value != 'identity':
                self.fail(f"unknown hermitian form {entry.value!r}", 'hermitian')
        return [[diagonal[i] if i == j else zero for j in range(rank)] for i in range(rank)]

    def build_reported(self, spec):
        entries = self.doc.mapping('reported')
        reported = ReportedData()
        try:
            if 'M' in entries:
                reported.M = self.integer(entries['M'], 'reported')
            if 'N' in entries:
                reported.N = parse_scalar(entries['N'], spec.scalar_context())
            reported.kappa = entries.get('kappa')
            reported.notes = entries.get('notes')
            reported.frobenius = entries.get('frobenius', 'unknown')
            reported.constants = parse_assignments(entries.get('constants', ''), spec.scalar_context(), ',')
            for i in range(spec.rank):
                key = f"A{i + 1}"
                if key in entries:
                    reported.potentials[key] = spec.parse_u(entries[key])
            if 'eta' in entries:
                reported.eta = parse_rows(entries['eta'], spec.scalar_context())
            if 'F' in entries:
                reported.F = spec.parse_u(entries['F'])
        except ExpressionSyntaxError as e:
            self.fail(str(e), 'reported')
        return reported

    def build_family(self, spec):
        entries = self.doc.mapping('family')
        constants = spec.constants
        family = FamilySpec(partner=entries.get('partner'))
        try:
            scalar = spec.scalar_context(constants)
            if 'lambda' in entries:
                family.lam = parse_expression(entries['lambda'], scalar)
            family.relations = parse_assignments(entries.get('relations', ''), scalar, ';', keep_poly=True)
            family.frobenius_at = parse_assignments(entries.get('frobenius_at', ''), spec.scalar_context(), ',')
            family.correction = self.weight_rules(entries.get('correction', ''), spec)
            family.dual_weights = self.weight_rules(entries.get('dual_weights', ''), spec)
            for i in range(spec.rank):
                key = f"A{i + 1}"
                if key in entries:
                    family.potentials[key] = spec.parse_u(entries[key], constants)
        except ExpressionSyntaxError as e:
            self.fail(str(e), 'family')
        return family

    def weight_rules(self, text, spec):
        """'4 @ 1..9 ; -3 @ 10..21' or '2 @ order 2 ; -5 @ order 5' -> WeightRule list."""
        if not text.strip():
            return []
        rules = []
        for part in text.split(';'):
            weight_text, sep, span = part.partition('@')
            if not sep:
                self.fail(f"weight rule {part.strip()!r} needs 'weight @ a..b' or 'weight @ order k'", 'family')
            weight = parse_scalar(weight_text.strip(), spec.scalar_context())
            span = span.strip()
            if span.startswith('order'):
                rules.append(WeightRule(weight, order=self.integer(span[len('order'):], 'family')))
                continue
            first, _, last = span.partition('..')
            first = self.integer(first, 'family')
            last = self.integer(last or str(first), 'family')
            if not 1 <= first <= last:
                self.fail(f"bad mirror range {first}..{last}", 'family')
            rules.append(WeightRule(weight, first=first, last=last))
        if spec.closure is None:
            # declared mirrors are known now; closures are checked when first used
            try:
                resolve_weights(rules, spec.declared_mirrors)
            except ConfigurationError as e:
                self.fail(str(e), 'family')
        return rules

    def build_pencil(self, spec):
        entries = self.doc.mapping('pencil')
        pencil = PencilSpec(seed=entries.get('seed', 'euclidean'))
        if pencil.seed not in ('euclidean', 'hessian'):
            self.fail(f"unknown pencil seed {pencil.seed!r}", 'pencil')
        try:
            if 'metric' in entries:
                pencil.metric = parse_rows(entries['metric'], spec.scalar_context())
            pencil.constants = parse_assignments(entries.get('constants', ''), spec.scalar_context(), ',')
            if 'eta' in entries:
                pencil.eta = parse_rows(entries['eta'], spec.scalar_context())
            if 'F' in entries:
                pencil.F = spec.parse_u(entries['F'])
        except ExpressionSyntaxError as e:
            self.fail(str(e), 'pencil')
        return pencil


def _coords(coeff, k):
    if coeff is None:
        return {}
    if isinstance(coeff, NumberFieldElement):
        return dict(coeff.coords)
    coeff = Fraction(coeff)
    return {(0,) * k: coeff} if coeff else {}


def parse_assignments(text, context, separator, keep_poly=False):
    """'c1 = -1/6, c2 = -1/2' -> {'c1': -1/6, 'c2': -1/2}."""
    values = {}
    parts = text.split(separator) if separator == ';' else split_top_level(text, separator)
    for part in parts:
        if not part.strip():
            continue
        name, sep, expr = part.partition('=')
        if not sep:
            raise ExpressionSyntaxError(f"expected 'name = value' in {part.strip()!r}")
        if keep_poly:
            values[name.strip()] = parse_expression(expr.strip(), context)
        else:
            values[name.strip()] = parse_scalar(expr.strip(), context)
    return values


def parse_rows(text, context):
    return [[parse_scalar(x, context) for x in split_top_level(row)] for row in text.split(';')]


# Ansatz
def build_ansatz_from(p_ring, base, degrees):
    """u_i = U_i + sum of c_k * (products of lower invariants of weight d_i), constants numbered in order."""
    corrections = []
    for i, d in enumerate(degrees):
        monomials = [m for m in weighted_monomials(degrees[:i], d)] if i else []
        corrections.append(monomials)
    count = sum(len(m) for m in corrections)
    constants = [f"c{k + 1}" for k in range(count)]
    ring = p_ring.with_params(constants)
    lifted = [b.to_ring(ring) for b in base]
    invariants = []
    k = 0
    for i, monomials in enumerate(corrections):
        poly = lifted[i]
        for exps in monomials:
            term = ring.var(constants[k])
            for j, e in enumerate(exps):
                if e:
                    term = term * lifted[j] ** e
            poly = poly + term
            k += 1
        invariants.append(poly)
    return AnsatzInvariants(ring, invariants, constants)


def build_ansatz(spec):
    """The ansatz of spec (declared or generated)."""
    return spec.ansatz


def instantiate(spec_or_ansatz, values):
    """Substitute constant values; constants left unassigned stay symbolic."""
    ansatz = spec_or_ansatz.ansatz if isinstance(spec_or_ansatz, GroupSpec) else spec_or_ansatz
    remaining = [c for c in ansatz.constants if c not in values]
    ring = ansatz.ring.with_params(remaining)
    field_ = ansatz.ring.field
    invariants = []
    for poly in ansatz.invariants:
        assigned = {c: v for c, v in values.items() if c in ansatz.ring.names}
        if assigned:
            substituted = {}
            for c, v in assigned.items():
                substituted[c] = v.to_ring(ansatz.ring) if isinstance(v, MultiPolynomial) else ansatz.ring.const(field_.coerce(v))
            poly = poly.substitute(substituted)
        invariants.append(poly.to_ring(ring))
    return AnsatzInvariants(ring, invariants, remaining)


# Mirror closure
def is_primitive_root(root, order, field_):
    power = field_.one
    for j in range(1, order + 1):
        power = power * root
        if (power == field_.one) != (j == order):
            return False
    return True


def _normalized(covector):
    lead = next(a for a in covector if a)
    return tuple(a / lead for a in covector)


class _Reflection:
    """beta -> beta - t beta(n) alpha, the action of a unitary reflection on covectors."""

    def __init__(self, mirror, inverse, field_, root):
        self.alpha = mirror.covector
        conj = [conjugate_scalar(field_, a) for a in self.alpha]
        self.n = [sum((row[m] * conj[m] for m in range(len(conj))), field_.zero) for row in inverse]
        norm = sum((a * v for a, v in zip(self.alpha, self.n)), field_.zero)
        if not norm:
            raise MirrorClosureError(f"mirror {list(self.alpha)} is isotropic for the Hermitian form")
        self.t = (field_.one - root) / norm
        self.zero = field_.zero

    def apply(self, covector):
        value = sum((b * v for b, v in zip(covector, self.n)), self.zero)
        if not value:
            return None
        factor = self.t * value
        return [b - a * factor for b, a in zip(covector, self.alpha)]


def close_mirrors(seeds, hermitian, field_, roots=None, limit=CLOSURE_LIMIT):
    """
    All mirrors reachable from the seeds under the reflections they define.

    Reflections are unitary for the Hermitian form, of the seed's order, with
    eigenvalue roots[order] (-1 for order 2 by default). Covectors come back
    normalized to a leading 1 and sorted by order, seeds first within an order.
    """
    roots = dict(roots or {})
    roots.setdefault(2, -field_.one)
    try:
        inverse = matrix_inverse(PolyMatrix([[field_.coerce(x) for x in row] for row in hermitian])).rows
    except SingularMatrixError:
        raise MirrorClosureError("Hermitian form is degenerate") from None
    mirrors, orders, reflections = [], {}, []

    def add(covector, order):
        key = _normalized([field_.coerce(a) for a in covector])
        known = orders.get(key)
        if known is not None:
            if known != order:
                raise MirrorClosureError(f"mirror {list(key)} reached with orders {known} and {order}")
            return
        if order not in roots:
            raise MirrorClosureError(f"no primitive root of order {order} for the closure")
        orders[key] = order
        mirrors.append(Mirror(list(key), order))
        reflections.append(_Reflection(mirrors[-1], inverse, field_, field_.coerce(roots[order])))
        if len(mirrors) > limit:
            raise MirrorClosureError(f"closure exceeds {limit} mirrors; the seeds do not generate a finite group")

    for seed in seeds:
        add(seed.covector, seed.order)
    done = 0
    while done < len(mirrors):
        current = len(mirrors)
        for b in range(current):
            for a in range(current):
                if a == b or max(a, b) < done:
                    continue
                image = reflections[b].apply(mirrors[a].covector)
                if image is not None:
                    add(image, mirrors[a].order)
        done = current
    return sorted(mirrors, key=lambda m: m.order)


# Registry
def _data_dir(data_dir):
    if data_dir:
        return data_dir
    from config import Config
    return Config.DATA_DIR or DEFAULT_DATA_DIR


def _index(data_dir):
    from utils.file_utils import list_group_files
    index = {}
    for path in list_group_files(data_dir):
        with open(path, encoding='utf-8') as handle:
            document = parse_group_text(handle.read(), path)
        meta = document.mapping('meta')
        names = [meta.get('name', os.path.splitext(os.path.basename(path))[0])]
        names += [a.strip() for a in meta.get('aliases', '').split(',') if a.strip()]
        for n in names:
            index[n] = (path, document)
    return index


def resolve_name(name, params=None):
    """Normalize a group name, extracting m from names like G(3,1,2)."""
    params = dict(params or {})
    match = FAMILY_NAME_RE.match(name.replace(' ', ''))
    if match:
        m, k = match.groups()
        if m != 'm':
            params['m'] = int(m)
        return f"G(m,1,{k})", params
    return name.strip(), params


def registry_lookup(name, params=None, data_dir=None):
    """Load and validate the group called name."""
    data_dir = _data_dir(data_dir)
    key, params = resolve_name(name, params)
    index = _index(data_dir)
    if key not in index:
        raise UnknownGroupError(f"unknown group {name!r} (data directory {data_dir})")
    path, document = index[key]
    logger.info("Loading group %s from %s", name, path)
    return GroupSpec.from_document(document, params)


def list_groups(data_dir=None):
    """Summary rows (name, rank, degrees, mirror count, modes) without building the groups."""
    rows = []
    seen = set()
    for name, (path, document) in sorted(_index(_data_dir(data_dir)).items()):
        if path in seen:
            continue
        seen.add(path)
        meta = document.mapping('meta')
        mirrors = 0
        entries = document.section('mirrors')
        if any(entry.value.split(' ', 1)[0] == 'closure' for entry in entries):
            # the closure is only computed on demand
            try:
                mirrors = parse_integer(document.mapping('reported').get('M', ''))
            except ExpressionSyntaxError:
                mirrors = None
            entries = []
        for entry in entries:
            loop = LOOP_RE.match(entry.value)
            if loop:
                try:
                    mirrors += parse_integer(loop.group(3)) - parse_integer(loop.group(2)) + 1
                except ExpressionSyntaxError:
                    mirrors = None
                    break
            else:
                mirrors += 1
        aliases = [a.strip() for a in meta.get('aliases', '').split(',') if a.strip()]
        rows.append({
            'name': meta.get('name', name),
            'aliases': aliases,
            'rank': meta.get('rank'),
            'degrees': meta.get('degrees'),
            'mirrors': mirrors,
            'modes': meta.get('modes', 'standard'),
            'parameters': meta.get('parameters', ''),
            'heavy': meta.get('heavy', 'no') == 'yes',
            'description': meta.get('description', ''),
        })
    return rows


# Structural checks
@dataclass
class FactorizationReport:
    constant: object
    multiplicities: list


def verify_mirror_factorization(spec, mirrors=None):
    """det J = constant * prod alpha_s^(order_s - 1); raise naming the first mirror that fails."""
    mirrors = spec.mirrors if mirrors is None else mirrors
    det = determinant(jacobian(spec.base_invariants))
    remainder = det
    multiplicities = []
    for index, mirror in enumerate(mirrors):
        alpha = linear_form(spec.p_ring, mirror.covector)
        count = 0
        while True:
            try:
                remainder = remainder.exact_divide(alpha)
            except DivisibilityError:
                break
            count += 1
        multiplicities.append(count)
        if count != mirror.order - 1:
            raise FactorizationMismatchError(
                f"mirror {index + 1} divides det J with multiplicity {count}, expected {mirror.order - 1}",
                mirror=index + 1)
    if not remainder.is_constant():
        raise FactorizationMismatchError(
            f"det J has factors of degree {remainder.total_degree()} outside the mirrors")
    return FactorizationReport(remainder.constant_value(), multiplicities)


def linear_form(ring, covector):
    form = ring.zero()
    for coeff, var in zip(covector, ring.coords):
        if coeff:
            form = form + ring.var(var) * coeff
    return form


def isobaric_check(spec, invariants=None):
    """Residuals sum_k p^k d_k u^i - d_i u^i (all zero for a valid ansatz)."""
    invariants = invariants or spec.ansatz.invariants
    residuals = []
    for u, d in zip(invariants, spec.degrees):
        euler = u.ring.zero()
        for var in u.ring.coords:
            euler = euler + u.ring.var(var) * u.partial(var)
        residuals.append(euler - u * d)
    return residuals


def det_jacobian_degree(spec):
    return determinant(jacobian(spec.base_invariants)).total_degree()
