"""
Run pipelines for one reflection group.

This module handles:
- RunConfig validation and per-group defaults (sampled level for heavy groups)
- The standard pipeline: conditions, constants, bi-flat checklist, potentials, Frobenius detection
- The family pipeline: relations, lambda(c), identities in the free parameter, family potentials
- The flat pencil, Dunkl-Kohno and WDVV pipelines and the sample-flatness mode
- Assembly of the report document and the exit code
"""

import logging
import random
from dataclasses import dataclass, field, replace
from fractions import Fraction

from .biflat import (
    Frame, Residual, almost_hydro_check, associativity_check, commutativity_check, curvature,
    dual_homogeneity_check, dual_product_from_invariants, euler_field, lie_checks, make_level, nabla_nabla_euler,
    product_compatibility, scaling_equivalence, standard_saito_pde_check, unit_check
)
from .constsolver import (
    ALMOST_HYDRO, COMPATIBILITY, DUAL_FLATNESS, MULTIPLIER, SOLVER_MODES, ConditionSystem, collect_conditions,
    family_structures, render_solution, sample_flatness_conditions, sample_levels, solve_constants,
    standard_structures, verify_constants, with_multiplier
)
from .dunkl import (
    Arrangement, compare_weights, correction_terms, dk_product, dk_terms, fit_weights, normalization_sum,
    scalar_wdvv_potential, vee_system_check, veselov_potential
)
from .errors import ConfigurationError, OrbitbookError, UnknownGroupError, VariableMismatchError
from .exprparse import render_expression, render_scalar
from .groups import (
    AnsatzInvariants, instantiate, isobaric_check, registry_lookup, verify_mirror_factorization
)
from .multipoly import MultiPolynomial
from .numberfield import conjugate_scalar
from .potentials import (
    VectorPotential, euclidean_pencil, family_potential, fit_vector_potential, frobenius_detect,
    normalize_frobenius, pencil_flatness, symbolic_vector_potential
)
from .report import build_document
from .wdvv import wdvv_check

logger = logging.getLogger(__name__)

MODES = ('standard', 'family', 'pencil', 'dunkl', 'wdvv', 'all', 'sample-flatness')
LEVELS = ('symbolic', 'sampled')
FORMATS = ('text', 'structured')

PASS, FAIL, SKIPPED = 'pass', 'fail', 'skipped'

STAGE_VERBS = {
    'solve_constants': 'solve the ansatz constants',
    'checklist': 'run the bi-flat checklist',
    'vector_potential': 'compute the vector potential',
    'frobenius_detect': 'detect a Frobenius metric',
    'family': 'solve the family relations',
    'family_potential': 'compute the family potential',
    'family_frobenius': 'detect a Frobenius metric in the family',
    'coxeter_equivalence': 'match the Coxeter partner family',
    'pencil': 'build the flat pencil',
    'mirror_closure': 'close the mirror arrangement',
    'mirror_factorization': 'factor det J over the mirrors',
    'dunkl_kohno': 'fit the Dunkl-Kohno weights',
    'vee_system': 'check the vee-system conditions',
}


@dataclass
class RunConfig:
    group: str
    mode: str = 'standard'
    level: str = None
    points: int = 8
    seed: int = 20240601
    data_dir: str = None
    output_format: str = 'structured'
    params: dict = field(default_factory=dict)
    default_level: str = 'symbolic'
    heavy_groups: list = field(default_factory=list)
    solver: str = None

    def validate(self):
        if not self.group:
            raise ConfigurationError("a group is required")
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown mode {self.mode!r} (expected one of {', '.join(MODES)})")
        if self.level is not None and self.level not in LEVELS:
            raise ConfigurationError(f"unknown level {self.level!r} (expected symbolic or sampled)")
        if self.default_level not in LEVELS:
            raise ConfigurationError(f"unknown default level {self.default_level!r}")
        if self.output_format not in FORMATS:
            raise ConfigurationError(f"unknown format {self.output_format!r} (expected text or structured)")
        if self.points < 1:
            raise ConfigurationError(f"points must be positive, got {self.points}")
        if self.solver is not None and self.solver not in SOLVER_MODES:
            raise ConfigurationError(f"unknown solver {self.solver!r} (expected solve or verify)")
        return self

    @classmethod
    def from_mapping(cls, data, defaults=None):
        """Build from a JSON body or CLI options; unknown keys are rejected."""
        data = dict(defaults or {}, **{k: v for k, v in (data or {}).items() if v is not None})
        allowed = set(cls.__dataclass_fields__)
        unknown = sorted(set(data) - allowed)
        if unknown:
            raise ConfigurationError(f"unknown run option(s): {', '.join(unknown)}")
        try:
            if 'points' in data:
                data['points'] = int(data['points'])
            if 'seed' in data:
                data['seed'] = int(data['seed'])
            if 'params' in data:
                data['params'] = {k: int(v) for k, v in data['params'].items()}
        except (TypeError, ValueError, AttributeError) as e:
            raise ConfigurationError(f"invalid run option: {e}") from None
        return cls(**data).validate()


def defaults_from_config(settings):
    """RunConfig defaults from an application config mapping (ORBITBOOK_* settings)."""
    return {
        'default_level': settings.get('DEFAULT_LEVEL', 'symbolic'),
        'points': settings.get('DEFAULT_POINTS', 8),
        'seed': settings.get('DEFAULT_SEED', 20240601),
        'data_dir': settings.get('DATA_DIR'),
        'heavy_groups': list(settings.get('HEAVY_GROUPS', ())),
    }


@dataclass
class RunResult:
    document: dict
    exit_code: int

    @property
    def status(self):
        return self.document['summary']['status']


# Checks
class Checklist:
    """Ordered check records; residuals from several sample points merge into one record."""

    def __init__(self):
        self.records = []
        self._index = {}

    def add(self, name, status, witness=''):
        if name in self._index:
            record = self.records[self._index[name]]
            if record['status'] != FAIL and status == FAIL:
                record['status'], record['witness'] = FAIL, witness
            return
        self._index[name] = len(self.records)
        self.records.append({'name': name, 'status': status, 'witness': witness})

    def residual(self, name, residual):
        self.add(name, PASS if residual.passed else FAIL, residual.witness())

    def failed(self):
        return [r for r in self.records if r['status'] == FAIL]

    def summary(self):
        counts = {s: sum(1 for r in self.records if r['status'] == s) for s in (PASS, FAIL, SKIPPED)}
        counts['status'] = FAIL if counts[FAIL] else PASS
        return counts


def _per_point(invariants, level, points, seed, build):
    """build(frame) once symbolically, or at each sample point (singular points are resampled)."""
    ring = invariants[0].ring

    def step(lvl):
        return build(Frame(lvl, invariants))

    if level == 'symbolic':
        return [step(make_level(ring))]
    return [result for _, result in sample_levels(ring, points, seed, step)]


# Group runs
class GroupRun:
    """State shared by the pipelines of one run: the group, solved constants and potentials."""

    def __init__(self, spec, config):
        self.spec = spec
        self.config = config
        heavy = spec.heavy or spec.name in config.heavy_groups
        self.level = config.level or ('sampled' if heavy else config.default_level)
        self.checks = Checklist()
        self.sections = {}
        self.constant_values = None
        self.solve_failed = False
        self.invariants = None
        self.potential = None
        self.family_potential = None
        self.rng = random.Random(config.seed)
        self.solver = config.solver or 'solve'

    @property
    def degrees(self):
        return self.spec.degrees

    def per_point(self, invariants, build, seed_offset=0):
        return _per_point(invariants, self.level, self.config.points, self.config.seed + seed_offset, build)

    def guarded(self, name, action, *args):
        """Run one pipeline stage; module errors become a failed check."""
        try:
            return action(*args)
        except ConfigurationError:
            raise
        except OrbitbookError as e:
            verb = STAGE_VERBS.get(name, name.replace('_', ' '))
            logger.error("Failed to %s for %s: %s", verb, self.spec.name, e)
            self.checks.add(name, FAIL, f"Failed to {verb}: {e}")
            return None

    # Constants
    def solve_standard(self):
        """Solved ansatz constants (cached); None when they cannot be determined."""
        if self.solve_failed:
            return None
        if self.constant_values is not None:
            return self.constant_values
        spec, ansatz = self.spec, self.spec.ansatz
        section = self.sections.setdefault('constants', {})
        values = {}
        if ansatz.constants:
            system = collect_conditions(spec, ansatz, level=self.level, points=self.config.points,
                                        seed=self.config.seed)
            section['solver'] = self.solver
            if self.solver == 'verify':
                values = self.verify_reported(system, section)
            else:
                result = solve_constants(system)
                section['status'] = result.status
                section['solutions'] = [render_solution(s) for s in result.solutions]
                if result.status == 'inconsistent':
                    values = self.solve_subset(system, section)
                elif result.unique is not None:
                    values = result.unique
                else:
                    values = self.choose_solution(system, result, section)
            if values is None:
                self.solve_failed = True
                self.checks.add('constants', FAIL, section.get('witness', 'no solution for the ansatz constants'))
                return None
            section['values'] = render_solution(values)
            reported = spec.reported.constants
            if reported:
                section['matches_reported'] = all(values.get(k) == v for k, v in reported.items())
        inst = instantiate(ansatz, values)
        self.invariants = [u.to_ring(spec.p_ring) for u in inst.invariants]
        self.constant_values = values
        residuals = [r for r in isobaric_check(spec, self.invariants) if r]
        self.checks.add('isobaric', PASS if not residuals else FAIL,
                        render_expression(residuals[0]) if residuals else '')
        return values

    def solve_subset(self, system, section):
        """Whole system inconsistent: solve the dual-flatness and almost-hydro part, keep the rest as checks."""
        keep = [i for i, o in enumerate(system.origins) if o in (DUAL_FLATNESS, ALMOST_HYDRO)]
        sub = ConditionSystem(system.unknowns, [system.equations[i] for i in keep], system.field,
                              [system.origins[i] for i in keep])
        result = solve_constants(sub)
        section['subset'] = [DUAL_FLATNESS, ALMOST_HYDRO]
        section['subset_status'] = result.status
        if result.unique is None:
            section['witness'] = 'no solution of the flatness and almost-hydro conditions'
            return None
        logger.info("Constants of %s fixed by flatness and almost-hydro conditions only", self.spec.name)
        return result.unique

    def choose_solution(self, system, result, section):
        """Several or unresolved solutions: every root is reported and the constants stay undetermined."""
        if result.unresolved:
            section['witness'] = 'unresolved: ' + '; '.join(render_expression(e) for e in result.unresolved[:3])
            return None
        section['status'] = 'ambiguous'
        shown = [', '.join(f"{k} = {v}" for k, v in render_solution(s).items()) for s in result.solutions[:3]]
        section['witness'] = f"ambiguous: {len(result.solutions)} solutions ({'; '.join(shown)})"
        return None

    def verify_reported(self, system, section):
        """--solver verify: the tabulated constants must satisfy every condition exactly."""
        reported = self.spec.reported.constants
        if not reported:
            section['witness'] = 'no reported constants to verify'
            return None
        check = verify_constants(system, reported)
        section['status'] = 'verified' if check.passed and not check.unassigned else 'rejected'
        if check.unassigned:
            section['witness'] = f"reported constants leave {', '.join(check.unassigned)} unassigned"
            return None
        if not check.passed:
            section['witness'] = '; '.join(check.witnesses)
            return None
        return dict(reported)

    def ready(self):
        return self.guarded('solve_constants', self.solve_standard) is not None

    # Standard pipeline
    def standard(self):
        if not self.ready():
            return
        self.guarded('checklist', self.checklist)
        potential = self.guarded('vector_potential', self.compute_potential)
        if potential is not None:
            self.guarded('frobenius_detect', self.detect_frobenius, potential)

    def checklist(self):
        dn = self.degrees[-1]

        def build(frame):
            s = standard_structures(frame, self.degrees)
            E = euler_field(frame.level)
            residuals = [
                ('commutativity_natural', commutativity_check(s['prod'])),
                ('associativity_natural', associativity_check(s['prod'])),
                ('commutativity_dual', commutativity_check(s['cstar'])),
                ('associativity_dual', associativity_check(s['cstar'])),
                ('unit_natural', unit_check(s['prod'], s['e'], 'unit_natural')),
                ('unit_dual', unit_check(s['cstar'], E, 'unit_dual')),
                ('flat_natural', curvature(s['nabla1'])),
                ('flat_dual', curvature(s['nabla2'])),
                ('nabla_nabla_euler', nabla_nabla_euler(s['nabla1'], E)),
                ('compatibility', product_compatibility(s['nabla1'], s['prod'])),
                ('compatibility_dual', product_compatibility(s['nabla2'], s['cstar'])),
                ('almost_hydro', almost_hydro_check(s['nabla1'], s['nabla2'], s['prod'])),
            ]
            residuals.extend(lie_checks(s['prod'], E, s['e'], dn).items())
            residuals.append(('lie_dual', dual_homogeneity_check(s['cstar'], E)))
            return residuals

        for residuals in self.per_point(self.invariants, build):
            for name, residual in residuals:
                self.checks.residual(name, residual)

    def compute_potential(self):
        if self.potential is not None:
            return self.potential
        spec = self.spec

        def builder(frame):
            return standard_structures(frame, self.degrees)

        potential = None
        if self.level == 'symbolic':
            try:
                frame = Frame(make_level(spec.p_ring), self.invariants)
                potential = symbolic_vector_potential(builder(frame), frame, self.degrees, spec.u_ring)
            except OrbitbookError as e:
                logger.info("Symbolic potential for %s unavailable (%s); fitting from points", spec.name, e)
        if potential is None:
            potential = fit_vector_potential(self.invariants, self.degrees, builder, spec.u_ring,
                                             self.config.points, self.config.seed)
        self.potential = potential
        section = self.sections.setdefault('potentials', {})
        section.update(potential.render())
        section['reported'] = self.compare_potential(potential.A, spec.reported.potentials)
        return potential

    def compare_potential(self, ours, reported, rescale=True):
        """Equal, equal after u_i -> l_i u_i, or different; tabulated values are never a pass criterion."""
        if not reported:
            return None
        theirs = [reported.get(f"A{i + 1}") for i in range(len(ours))]
        if any(t is None for t in theirs):
            return {'status': 'partial'}
        try:
            if all(a.drop_affine() == b.to_ring(a.ring).drop_affine() for a, b in zip(ours, theirs)):
                return {'status': 'equal'}
        except VariableMismatchError:
            return {'status': 'incomparable'}
        if not rescale:
            return {'status': 'different'}
        result = scaling_equivalence(ours, theirs, self.degrees)
        if result.solutions:
            return {'status': 'rescaled', 'scales': render_solution(result.solutions[0])}
        return {'status': 'different', 'solver': result.status}

    def detect_frobenius(self, potential, reported_F=None, section_name='frobenius'):
        reported = self.spec.reported
        candidate = frobenius_detect(potential.structure_constants(), self.degrees, potential.ring, rng=self.rng)
        candidate = normalize_frobenius(candidate, reported_F if reported_F is not None else reported.F)
        section = {'exists': candidate is not None, 'reported': reported.frobenius}
        if candidate is not None:
            section.update(candidate.render())
        if reported.frobenius in ('yes', 'no'):
            section['agrees_with_reported'] = (candidate is not None) == (reported.frobenius == 'yes')
        self.sections[section_name] = section
        return candidate

    def arrangement_mirrors(self):
        """The mirrors of the group, closing the declared ones first if needed; None when the closure fails."""
        spec = self.spec
        if spec.closure is None:
            return spec.mirrors
        mirrors = self.guarded('mirror_closure', lambda: spec.mirrors)
        if mirrors is not None:
            self.checks.add('mirror_closure', PASS)
            self.sections.setdefault('mirrors', {}).update(
                declared=len(spec.declared_mirrors), closed=len(mirrors),
                orders={str(k): sum(1 for m in mirrors if m.order == k) for k in sorted({m.order for m in mirrors})})
        return mirrors

    # Family pipeline
    def family(self):
        spec = self.spec
        if spec.family is None:
            self.checks.add('family', SKIPPED, 'no family data for this group')
            return
        mirrors = self.arrangement_mirrors()
        if mirrors is None:
            return
        if not mirrors:
            self.checks.add('family', SKIPPED, 'mirror covectors not available')
            return
        self.guarded('family', self.run_family)

    def family_inputs(self, ring):
        family = self.spec.family
        arr = Arrangement.from_spec(self.spec)
        weights = family.dual_weights_for(arr.mirrors) or arr.orders
        _, N = normalization_sum(arr, weights)
        log_terms = dk_terms(arr, ring, weights, N)
        correction = family.correction_for(arr.mirrors)
        corr = correction_terms(arr, correction, ring) if correction else []
        return log_terms, corr, N

    def run_family(self):
        spec, family = self.spec, self.spec.family
        ansatz = spec.ansatz
        section = self.sections.setdefault('family', {})
        ring, invariants = with_multiplier(ansatz.ring, ansatz.invariants)
        lam_ansatz = AnsatzInvariants(ring, invariants, list(ansatz.constants) + [MULTIPLIER])
        log_terms, corr, N = self.family_inputs(ring)
        section['N'] = render_scalar(N)

        def builder(frame):
            return family_structures(frame, log_terms, corr)

        free = [c for c in ansatz.constants if c not in family.relations][:1]
        section['free'] = free
        system = collect_conditions(spec, lam_ansatz, (COMPATIBILITY, ALMOST_HYDRO), level=self.level,
                                    points=self.config.points, seed=self.config.seed, builder=builder)
        result = solve_constants(system, free=free)
        section['solver'] = result.status
        values = result.unique
        if values is None:
            declared = dict(family.relations)
            if family.lam is not None:
                declared[MULTIPLIER] = family.lam
            check = verify_constants(system, declared)
            if not check.passed or check.unassigned:
                self.checks.add('family_relations', FAIL, '; '.join(check.witnesses) or 'unresolved relations')
                return
            values = declared
            section['source'] = 'declared'
        self.checks.add('family_relations', PASS)
        lam = values.get(MULTIPLIER, 0)
        section['relations'] = render_solution({k: v for k, v in values.items() if k != MULTIPLIER})
        section['lambda'] = render_solution({MULTIPLIER: lam})[MULTIPLIER]
        if family.lam is not None:
            section['lambda_matches_reported'] = _same_value(lam, family.lam)
        self.verify_family(values)
        self.guarded('family_potential', self.compute_family_potential, values, free)

    def verify_family(self, values):
        """Flatness of nabla2 and compatibility with * identically in the free parameter."""
        relations = {k: v for k, v in values.items() if k != MULTIPLIER}
        inst = instantiate(self.spec.ansatz, relations)
        lam = _as_poly(values.get(MULTIPLIER, 0), inst.ring)
        log_terms, corr, _ = self.family_inputs(inst.ring)

        def build(frame):
            s = family_structures(frame, log_terms, corr, lam=lam)
            return [
                ('family_flat_dual', curvature(s['nabla2'])),
                ('family_compatibility', product_compatibility(s['nabla1'], s['prod'])),
                ('family_compatibility_dual', product_compatibility(s['nabla2'], s['cstar'])),
                ('family_almost_hydro', almost_hydro_check(s['nabla1'], s['nabla2'], s['prod'])),
                ('family_unit_dual', unit_check(s['cstar'], euler_field(frame.level), 'family_unit_dual')),
            ]

        for residuals in self.per_point(inst.invariants, build):
            for name, residual in residuals:
                self.checks.residual(name, residual)

    def compute_family_potential(self, values, free):
        spec, family = self.spec, self.spec.family
        section = self.sections['family']
        relations = {k: v for k, v in values.items() if k != MULTIPLIER}
        lam = values.get(MULTIPLIER, 0)
        log_terms, corr, _ = self.family_inputs(spec.p_ring)

        def builder_for(assigned):
            lam_value = _evaluate(lam, assigned)

            def builder(frame):
                return family_structures(frame, log_terms, corr, lam=lam_value)
            return builder

        if free:
            potential = family_potential(spec.ansatz, relations, free[0], self.degrees, builder_for, spec.u_ring,
                                         self.config.points, self.config.seed)
        else:
            inst = instantiate(spec.ansatz, relations)
            potential = fit_vector_potential([u.to_ring(spec.p_ring) for u in inst.invariants], self.degrees,
                                             builder_for(relations), spec.u_ring, self.config.points,
                                             self.config.seed)
        self.family_potential = potential
        section['potentials'] = potential.render()
        section['reported'] = self.compare_potential(potential.A, family.potentials, rescale=False)
        if family.frobenius_at:
            self.guarded('family_frobenius', self.family_frobenius, potential)
        if family.partner:
            self.guarded('coxeter_equivalence', self.coxeter_equivalence, potential, free)
        return potential

    def specialize(self, potential, values):
        """Family potential at fixed parameter values, as polynomials of the plain u-ring."""
        out = []
        for a in potential.A:
            value = a.evaluate(values) if values else a
            out.append(_as_poly(value, a.ring).to_ring(self.spec.u_ring))
        return out

    def family_frobenius(self, potential):
        at = self.spec.family.frobenius_at
        specialized = VectorPotential(self.specialize(potential, at))
        candidate = self.detect_frobenius(specialized, section_name='family_frobenius')
        section = self.sections.pop('family_frobenius')
        section['at'] = render_solution(at)
        self.sections['family']['frobenius'] = section
        self.checks.add('family_frobenius', PASS if candidate is not None else FAIL,
                        '' if candidate is not None else 'no constant invertible metric at the printed value')

    def partner_family(self):
        """(partner spec, its computed family potential, its free parameter) or None when unavailable."""
        try:
            partner = registry_lookup(self.spec.family.partner, data_dir=self.config.data_dir)
        except UnknownGroupError as e:
            self.checks.add('coxeter_equivalence', SKIPPED, str(e))
            return None
        if partner.family is None or 'family' not in partner.modes:
            self.checks.add('coxeter_equivalence', SKIPPED, f"{partner.name} has no family stage")
            return None
        partner_run = GroupRun(partner, replace(self.config, group=partner.name, mode='family', params={}))
        partner_run.family()
        if partner_run.family_potential is None:
            failed = [r['name'] for r in partner_run.checks.failed()]
            self.checks.add('coxeter_equivalence', FAIL,
                            f"no family potential for {partner.name} (failed: {', '.join(failed) or 'none'})")
            return None
        return partner, partner_run.family_potential, partner_run.sections['family'].get('free', [])

    def coxeter_equivalence(self, potential, free):
        """
        Match the family with the partner Coxeter family under u_i -> l_i u_i.

        Both potentials are polynomial in their parameter; the match is
        required at deg + 1 values of ours (deg the highest degree in it),
        each time solving for the scales and the partner parameter.
        """
        found = self.partner_family()
        if found is None:
            return
        partner, theirs, partner_free = found
        section = self.sections['family']
        section['partner'] = partner.name
        if free:
            degree = max(1, max(a.degree_in(free[0]) for a in potential.A))
            nodes = [Fraction(k) for k in range(1, degree + 2)]
        else:
            nodes = [None]
        matches = []
        for node in nodes:
            ours = self.specialize(potential, {free[0]: node} if node is not None else {})
            result = scaling_equivalence(ours, theirs.A, self.degrees, free=partner_free)
            if not result.solutions:
                at = f" at {free[0]} = {node}" if node is not None else ''
                self.checks.add('coxeter_equivalence', FAIL,
                                f"no rescaling matches {partner.name}{at} ({result.status})")
                section['partner_matches'] = matches
                return
            entry = {'scales': [render_solution(s) for s in result.solutions]}
            if node is not None:
                entry[free[0]] = render_scalar(node)
            matches.append(entry)
        section['partner_matches'] = matches
        self.checks.add('coxeter_equivalence', PASS)

    # Pencil
    def pencil(self):
        if self.spec.pencil is None:
            self.checks.add('pencil', SKIPPED, 'no pencil data for this group')
            return
        self.guarded('pencil', self.run_pencil)

    def run_pencil(self):
        spec, pencil = self.spec, self.spec.pencil
        inst = instantiate(spec.ansatz, pencil.constants)
        invariants = [u.to_ring(spec.p_ring) for u in inst.invariants]
        metric, candidate = euclidean_pencil(spec, invariants, pencil.seed, pencil.metric, pencil.eta)
        self.checks.add('pencil_linear', PASS)
        candidate = normalize_frobenius(candidate, pencil.F)
        lambdas = [Fraction(0), Fraction(1), Fraction(self.rng.randint(2, 97), self.rng.randint(2, 97))]
        for lam, status in pencil_flatness(metric, lambdas).items():
            self.checks.add(f"pencil_flat[{lam}]", PASS if status == PASS else FAIL,
                            '' if status == PASS else status)
        section = metric.render()
        section['frobenius'] = candidate.render()
        if pencil.F is not None:
            section['F_matches_reported'] = candidate.matches_reported
        self.sections['pencil'] = section

    # Dunkl-Kohno
    def dunkl(self):
        mirrors = self.arrangement_mirrors()
        if mirrors is None:
            return
        if not mirrors:
            self.checks.add('dunkl', SKIPPED, 'mirror covectors not available for this group')
            return
        self.guarded('mirror_factorization', self.factorization)
        if not self.ready():
            return
        self.guarded('dunkl_kohno', self.run_dunkl)
        if self.is_real():
            self.guarded('vee_system', self.vee)

    def factorization(self):
        report = verify_mirror_factorization(self.spec)
        self.checks.add('mirror_factorization', PASS)
        self.sections.setdefault('dunkl', {})['det_constant'] = render_scalar(report.constant)

    def is_real(self):
        spec = self.spec
        if any(conjugate_scalar(spec.field, h) != h for row in spec.hermitian for h in row):
            return False
        return all(conjugate_scalar(spec.field, a) == a for m in spec.mirrors for a in m.covector)

    def run_dunkl(self):
        spec = self.spec
        arr = Arrangement.from_spec(spec)
        section = self.sections.setdefault('dunkl', {})
        _, N_orders = normalization_sum(arr)
        section['N_orders'] = render_scalar(N_orders) if N_orders is not None else None

        def target(frame):
            return dual_product_from_invariants(frame, self.degrees)

        targets = _per_point(self.invariants, 'sampled', max(2, self.config.points), self.config.seed + 1, target)
        fit = fit_weights(arr, targets)
        section['fit'] = fit.render()
        section['fit']['compared_to_orders'] = compare_weights(fit, arr.orders)
        if spec.reported.N is not None:
            section['reported_N'] = render_scalar(spec.reported.N)

        def build(frame):
            lvl, n = frame.level, frame.n
            dk = dk_product(arr, lvl, fit.weights, fit.N)
            cstar = dual_product_from_invariants(frame, self.degrees)
            entries = [((i, j, k), lvl.val(dk[i][j][k]) - lvl.val(cstar[i][j][k]))
                       for i in range(n) for j in range(n) for k in range(j, n)]
            return [('dunkl_kohno', Residual('dunkl_kohno', lvl, entries)),
                    ('saito_pde', standard_saito_pde_check(frame, dk, self.degrees))]

        for residuals in self.per_point(self.invariants, build):
            for name, residual in residuals:
                self.checks.residual(name, residual)
        section['veselov_potential'] = veselov_potential(arr, fit.weights, fit.N).render(spec.p_ring)

    def vee(self):
        spec = self.spec
        covectors = [m.covector for m in spec.mirrors]
        report = vee_system_check(covectors, spec.field)
        self.checks.add('vee_system', PASS if report.passed else FAIL, report.witness)
        self.checks.add('vee_planes', PASS if report.plane_passed else FAIL,
                        '' if report.plane_passed else f"planes {report.failing_planes[:3]}")
        section = self.sections.setdefault('dunkl', {})
        section['vee_planes_checked'] = report.planes_checked
        section['scalar_potential'] = scalar_wdvv_potential(covectors, spec.field).render(spec.p_ring)

    # WDVV
    def wdvv(self):
        if not self.ready():
            return
        potential = self.guarded('vector_potential', self.compute_potential)
        section = {}
        if potential is not None:
            report = wdvv_check(potential, self.degrees)
            for check in report.checks():
                self.checks.add(check['name'], check['status'], check['witness'])
            section['standard'] = report.render()
        if self.family_potential is not None:
            report = wdvv_check(self.family_potential, self.degrees)
            for check in report.checks():
                self.checks.add('family_' + check['name'], check['status'], check['witness'])
            section['family'] = report.render()
        self.sections['wdvv'] = section

    # Conjectural groups
    def sample_flatness(self):
        spec = self.spec
        system = sample_flatness_conditions(spec, spec.ansatz, points=self.config.points, seed=self.config.seed)
        section = self.sections.setdefault('constants', {})
        # conjectural constants are checked as printed unless --solver solve is given
        solver = self.config.solver or 'verify'
        section['solver'] = solver
        if solver == 'verify':
            if not spec.reported.constants:
                self.checks.add('sample_flatness', FAIL, 'no reported constants to verify')
                return
            check = verify_constants(system, spec.reported.constants)
            section['values'] = render_solution(spec.reported.constants)
            self.checks.add('sample_flatness', PASS if check.passed else FAIL, '; '.join(check.witnesses))
            return
        result = solve_constants(system)
        section['status'] = result.status
        section['solutions'] = [render_solution(s) for s in result.solutions]
        if result.unique is not None:
            section['values'] = render_solution(result.unique)
            self.checks.add('sample_flatness', PASS)
        elif result.solutions and not result.unresolved:
            section['status'] = 'ambiguous'
            self.checks.add('sample_flatness', FAIL, f"ambiguous: {len(result.solutions)} solutions")
        else:
            self.checks.add('sample_flatness', FAIL, f"solver: {result.status}")


def _as_poly(value, ring):
    if isinstance(value, MultiPolynomial):
        return value.to_ring(ring)
    return ring.const(value)


def _evaluate(value, assigned):
    if not isinstance(value, MultiPolynomial):
        return value
    names = {k: v for k, v in assigned.items() if k in value.ring.names}
    result = value.evaluate(names)
    return result.constant_value() if isinstance(result, MultiPolynomial) else result


def _same_value(a, b):
    if isinstance(a, MultiPolynomial) and isinstance(b, MultiPolynomial):
        return a.to_ring(b.ring) == b
    if isinstance(b, MultiPolynomial):
        return b.is_constant() and b.constant_value() == a
    if isinstance(a, MultiPolynomial):
        return a.is_constant() and a.constant_value() == b
    return a == b


def _stages(run, mode):
    spec = run.spec
    if mode == 'all':
        selected = [m for m in spec.modes if m != 'sample-flatness'] or list(spec.modes)
        if 'sample-flatness' not in selected and 'wdvv' not in selected and 'standard' in selected:
            selected.append('wdvv')
        order = ('sample-flatness', 'standard', 'family', 'pencil', 'dunkl', 'wdvv')
        return [m for m in order if m in selected]
    if mode not in spec.modes and not (mode == 'wdvv' and 'standard' in spec.modes):
        raise ConfigurationError(f"group {spec.name} does not support mode {mode!r} "
                                 f"(supported: {', '.join(spec.modes)})")
    return [mode]


def run(config):
    """Execute the selected pipelines for one group and assemble the report document."""
    config.validate()
    spec = registry_lookup(config.group, config.params, config.data_dir)
    group_run = GroupRun(spec, config)
    stages = _stages(group_run, config.mode)
    logger.info("Running %s on %s at the %s level", ', '.join(stages), spec.name, group_run.level)
    for stage in stages:
        getattr(group_run, stage.replace('-', '_'))()
    summary = group_run.checks.summary()
    exit_code = 1 if summary[FAIL] else 0
    summary['exit_code'] = exit_code
    document = build_document(spec, config, group_run.level, group_run.checks.records, group_run.sections,
                              summary)
    logger.info("%s %s: %d passed, %d failed, %d skipped", spec.name, config.mode, summary[PASS],
                summary[FAIL], summary[SKIPPED])
    return RunResult(document, exit_code)
