"""
Exact arithmetic in towers of algebraic number fields.

This module handles:
- Algebraic generators with minimal polynomials over earlier generators
- Reduced tower elements (exponent tuple -> Fraction maps)
- Multiplication through a cached monomial product table
- Inversion by extended Euclid in the top generator
- Complex conjugation as a declared field automorphism

Scalars of the rational field (no generators) are plain Fractions; every
other field produces NumberFieldElement values. Both support the same
operator protocol, so polynomial code never needs to tell them apart.
"""

import random
from collections import defaultdict
from fractions import Fraction
from functools import lru_cache

from .errors import (
    ConfigurationError, FieldDivisionByZero, FieldMismatchError,
    ReducibleMinimalPolynomial
)


# Univariate helpers over Q (lists of Fractions, low -> high)
def _trim(coeffs):
    coeffs = list(coeffs)
    while coeffs and not coeffs[-1]:
        coeffs.pop()
    return coeffs


def _rational_divmod(a, b):
    a = _trim(a)
    b = _trim(b)
    quotient = [Fraction(0)] * max(len(a) - len(b) + 1, 1)
    while len(a) >= len(b) and a:
        factor = Fraction(a[-1]) / b[-1]
        shift = len(a) - len(b)
        quotient[shift] = factor
        for i, coeff in enumerate(b):
            a[shift + i] -= factor * coeff
        a = _trim(a)
    return _trim(quotient), a


@lru_cache(maxsize=None)
def cyclotomic_polynomial(m):
    """Coefficients (low -> high) of the m-th cyclotomic polynomial."""
    if m < 1:
        raise ConfigurationError(f"cyclotomic order must be positive, got {m}")
    numerator = [Fraction(-1)] + [Fraction(0)] * (m - 1) + [Fraction(1)]
    for d in range(1, m):
        if m % d == 0:
            numerator, remainder = _rational_divmod(numerator, list(cyclotomic_polynomial(d)))
            if remainder:
                raise ConfigurationError(f"cyclotomic division failed for m={m}")
    return tuple(numerator)


class AlgebraicGenerator:
    """
    One generator of a field tower.

    minimal_polynomial is a list of coefficients (low -> high). Each
    coefficient is a coords map over the earlier generators, so the
    polynomial lives over the subfield they generate. It must be monic.
    """

    __slots__ = ('name', 'minimal_polynomial', 'conjugation_source')

    def __init__(self, name, minimal_polynomial, conjugation_source=None):
        coeffs = [dict(c) for c in minimal_polynomial]
        while coeffs and not coeffs[-1]:
            coeffs.pop()
        if len(coeffs) < 2:
            raise ConfigurationError(f"minimal polynomial of {name} must be non-constant")
        if coeffs[-1] != {tuple(0 for _ in next(iter(coeffs[-1]))): Fraction(1)}:
            raise ConfigurationError(f"minimal polynomial of {name} must be monic")
        self.name = name
        self.minimal_polynomial = coeffs
        self.conjugation_source = conjugation_source

    @property
    def degree(self):
        return len(self.minimal_polynomial) - 1

    def signature(self):
        return (self.name, tuple(tuple(sorted(c.items())) for c in self.minimal_polynomial))

    def __repr__(self):
        return f"AlgebraicGenerator({self.name!r}, degree={self.degree})"


def rational_generator(name, coefficients, index=0, conjugation_source=None):
    """Build a generator whose minimal polynomial has rational coefficients."""
    key = (0,) * index
    poly = []
    for coeff in coefficients:
        coeff = Fraction(coeff)
        poly.append({key: coeff} if coeff else {})
    return AlgebraicGenerator(name, poly, conjugation_source)


class NumberField:
    """An ordered tower Q(g1)(g2)...(gk)."""

    def __init__(self, generators=()):
        self.generators = tuple(generators)
        self.names = tuple(g.name for g in self.generators)
        self.degrees = tuple(g.degree for g in self.generators)
        self.ngens = len(self.generators)
        self._signature = tuple(g.signature() for g in self.generators)
        self._tails = [self._tail(k) for k in range(self.ngens)]
        self._table = {}
        self._conj_images = [None] * self.ngens
        self._conj_cache = {}
        self._subfields = {}
        for k, gen in enumerate(self.generators):
            for coeff in gen.minimal_polynomial:
                for key in coeff:
                    if len(key) != k:
                        raise ConfigurationError(
                            f"minimal polynomial of {gen.name} uses generators beyond its subfield")
        self._install_default_conjugations()

    # Identity
    def __eq__(self, other):
        return isinstance(other, NumberField) and self._signature == other._signature

    def __hash__(self):
        return hash(self._signature)

    def __repr__(self):
        inner = ', '.join(self.names)
        return f"NumberField(Q({inner}))" if inner else "NumberField(Q)"

    def is_prefix_of(self, other):
        return other.ngens >= self.ngens and other._signature[:self.ngens] == self._signature

    @property
    def basis(self):
        """Reduced exponent tuples spanning the field over Q."""
        keys = [()]
        for degree in self.degrees:
            keys = [key + (e,) for key in keys for e in range(degree)]
        return keys

    # Construction
    @property
    def zero(self):
        return self.coerce(0)

    @property
    def one(self):
        return self.coerce(1)

    def coerce(self, value):
        """Return value as a scalar of this field."""
        if isinstance(value, NumberFieldElement):
            if value.field == self:
                return value if self.ngens else value.rational_value()
            if value.field.is_prefix_of(self):
                pad = (0,) * (self.ngens - value.field.ngens)
                coords = {key + pad: q for key, q in value.coords.items()}
                return NumberFieldElement(self, coords) if self.ngens else Fraction(coords.get((), 0))
            if self.is_prefix_of(value.field) and value.is_in_prefix(self.ngens):
                coords = {key[:self.ngens]: q for key, q in value.coords.items()}
                return NumberFieldElement(self, coords) if self.ngens else Fraction(coords.get((), 0))
            if value.is_rational():
                return self.coerce(value.rational_value())
            raise FieldMismatchError(f"{value.field!r} does not embed into {self!r}")
        value = Fraction(value)
        if not self.ngens:
            return value
        return NumberFieldElement(self, {(0,) * self.ngens: value} if value else {})

    def element(self, coords):
        """Build an element from a raw (possibly unreduced) coords map."""
        reduced = self.reduce_raw(coords)
        if not self.ngens:
            return Fraction(reduced.get((), 0))
        return NumberFieldElement(self, reduced)

    def gen(self, name):
        """The generator called name, as an element."""
        if name not in self.names:
            raise ConfigurationError(f"generator {name} is not declared in {self!r}")
        k = self.names.index(name)
        key = tuple(1 if i == k else 0 for i in range(self.ngens))
        return self.element({key: Fraction(1)})

    def subfield(self, k):
        """Field generated by the first k generators."""
        if k == self.ngens:
            return self
        if k not in self._subfields:
            sub = NumberField(self.generators[:k])
            for i in range(k):
                if self._conj_images[i] is not None and self._conj_images[i].is_in_prefix(k):
                    sub._conj_images[i] = sub.coerce(self._conj_images[i])
            self._subfields[k] = sub
        return self._subfields[k]

    def random_element(self, rng=None, bound=10):
        rng = rng or random.Random()
        coords = {}
        for key in self.basis:
            q = Fraction(rng.randint(-bound, bound), rng.randint(1, bound))
            if q:
                coords[key] = q
        return self.element(coords)

    # Reduction
    def _tail(self, k):
        """Monomial expansion of g_k^{D_k} = -sum a_j g_k^j."""
        gen = self.generators[k]
        tail = []
        for j, coeff in enumerate(gen.minimal_polynomial[:-1]):
            for key, q in coeff.items():
                mono = tuple(key) + (j,) + (0,) * (self.ngens - k - 1)
                tail.append((mono, -q))
        return tail

    def reduce_raw(self, raw):
        """Reduce an arbitrary exponent map modulo the minimal polynomials."""
        result = defaultdict(Fraction)
        stack = [(tuple(key), Fraction(q)) for key, q in raw.items() if q]
        degrees = self.degrees
        while stack:
            key, q = stack.pop()
            top = -1
            for k in range(self.ngens - 1, -1, -1):
                if key[k] >= degrees[k]:
                    top = k
                    break
            if top < 0:
                result[key] += q
                continue
            base = list(key)
            base[top] -= degrees[top]
            for mono, r in self._tails[top]:
                stack.append((tuple(b + m for b, m in zip(base, mono)), q * r))
        return {key: q for key, q in result.items() if q}

    def _product(self, a, b):
        entry = self._table.get((a, b))
        if entry is None:
            raw = {tuple(x + y for x, y in zip(a, b)): Fraction(1)}
            entry = tuple(self.reduce_raw(raw).items())
            self._table[(a, b)] = entry
            self._table[(b, a)] = entry
        return entry

    def multiply_coords(self, x, y):
        result = defaultdict(Fraction)
        for a, qa in x.items():
            for b, qb in y.items():
                q = qa * qb
                for key, r in self._product(a, b):
                    result[key] += q * r
        return {key: q for key, q in result.items() if q}

    # Inversion
    def _split(self, element):
        """Element as a list (low -> high in the top generator) of subfield scalars."""
        sub = self.subfield(self.ngens - 1)
        parts = defaultdict(dict)
        for key, q in element.coords.items():
            parts[key[-1]][key[:-1]] = q
        out = []
        for j in range(self.degrees[-1]):
            out.append(sub.element(parts.get(j, {})))
        return out

    def _join(self, coeffs):
        coords = {}
        for j, coeff in enumerate(coeffs):
            if isinstance(coeff, NumberFieldElement):
                items = coeff.coords.items()
            else:
                items = [((), Fraction(coeff))] if coeff else []
            for key, q in items:
                coords[tuple(key) + (j,)] = q
        return self.element(coords)

    def invert(self, element):
        element = self.coerce(element)
        if not element:
            raise FieldDivisionByZero("inverse of zero")
        if not self.ngens:
            return 1 / Fraction(element)
        sub = self.subfield(self.ngens - 1)
        top = self.generators[-1]
        modulus = [sub.element(c) for c in top.minimal_polynomial]
        r0, r1 = _strip(modulus), _strip(self._split(element))
        s0, s1 = [], [sub.one]
        while r1:
            q, r = _sub_divmod(r0, r1)
            r0, r1 = r1, r
            s0, s1 = s1, _poly_sub(s0, _poly_mul(q, s1))
        if len(r0) != 1:
            raise ReducibleMinimalPolynomial(
                f"minimal polynomial of {top.name} is reducible over {sub!r}")
        scale = 1 / r0[0]
        inverse = [c * scale for c in s0]
        return self._join(_reduce_mod(inverse, modulus))

    # Conjugation
    def _install_default_conjugations(self):
        for k, gen in enumerate(self.generators):
            if gen.conjugation_source is not None:
                continue
            key = tuple(1 if i == k else 0 for i in range(self.ngens))
            if gen.name == 'I':
                self._conj_images[k] = NumberFieldElement(self, {key: Fraction(-1)})
            elif gen.name.startswith('sqrt('):
                self._conj_images[k] = NumberFieldElement(self, {key: Fraction(1)})

    def set_conjugation(self, name, image):
        """Declare the conjugate of generator name (an element of this field)."""
        k = self.names.index(name)
        self._conj_images[k] = self.coerce(image) if self.ngens else image
        self._conj_cache.clear()
        self._subfields.clear()

    def has_conjugation(self):
        return all(image is not None for image in self._conj_images)

    def _conj_monomial(self, key):
        cached = self._conj_cache.get(key)
        if cached is not None:
            return cached
        value = self.one
        for k, e in enumerate(key):
            if not e:
                continue
            image = self._conj_images[k]
            if image is None:
                raise ConfigurationError(
                    f"generator {self.names[k]} has no declared conjugation image")
            value = value * image ** e
        self._conj_cache[key] = value
        return value

    def conjugate(self, element):
        element = self.coerce(element)
        if not self.ngens:
            return element
        result = self.zero
        for key, q in element.coords.items():
            result = result + self._conj_monomial(key) * q
        return result

    def validate_conjugation(self):
        """Check every declared image is a root of the conjugated minimal polynomial and conj is an involution."""
        for k, gen in enumerate(self.generators):
            image = self._conj_images[k]
            if image is None:
                continue
            total = self.zero
            for j, coeff in enumerate(gen.minimal_polynomial):
                lifted = self.coerce(self.subfield(k).element(coeff)) if coeff else self.zero
                total = total + self.conjugate(lifted) * image ** j
            if total:
                raise ConfigurationError(
                    f"conjugation image of {gen.name} is not a root of its minimal polynomial")
            if self.conjugate(image) != self.gen(gen.name):
                raise ConfigurationError(f"conjugation of {gen.name} is not an involution")
        return True

    # Rendering
    def render_monomial(self, key):
        parts = []
        for name, e in zip(self.names, key):
            if e == 1:
                parts.append(name)
            elif e > 1:
                parts.append(f"{name}^{e}")
        return '*'.join(parts)


# Univariate helpers over subfield scalars
def _strip(coeffs):
    coeffs = list(coeffs)
    while coeffs and not coeffs[-1]:
        coeffs.pop()
    return coeffs


def _poly_sub(a, b):
    size = max(len(a), len(b))
    out = []
    for i in range(size):
        x = a[i] if i < len(a) else 0
        y = b[i] if i < len(b) else 0
        out.append(x - y)
    return _strip(out)


def _poly_mul(a, b):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] = out[i + j] + x * y
    return _strip(out)


def _sub_divmod(a, b):
    a = _strip(a)
    b = _strip(b)
    inv_lead = 1 / b[-1]
    quotient = [0] * max(len(a) - len(b) + 1, 1)
    while len(a) >= len(b) and a:
        factor = a[-1] * inv_lead
        shift = len(a) - len(b)
        quotient[shift] = factor
        for i, coeff in enumerate(b):
            a[shift + i] = a[shift + i] - factor * coeff
        a.pop()
        a = _strip(a)
    return _strip(quotient), a


def _reduce_mod(coeffs, modulus):
    coeffs = _strip(coeffs)
    if len(coeffs) < len(modulus):
        return coeffs
    return _sub_divmod(coeffs, modulus)[1]


class NumberFieldElement:
    """Reduced element of a NumberField with at least one generator."""

    __slots__ = ('field', 'coords')

    def __init__(self, field, coords):
        self.field = field
        self.coords = {tuple(k): Fraction(q) for k, q in coords.items() if q}

    # Protocol helpers
    def _other(self, other):
        if isinstance(other, NumberFieldElement):
            if other.field == self.field:
                return other
            return self.field.coerce(other)
        if isinstance(other, (int, Fraction)):
            return self.field.coerce(other)
        return None

    def is_rational(self):
        return all(not any(key) for key in self.coords)

    def rational_value(self):
        if not self.is_rational():
            raise ValueError(f"{self} is not rational")
        return Fraction(self.coords.get((0,) * self.field.ngens, 0))

    def is_in_prefix(self, k):
        return all(not any(key[k:]) for key in self.coords)

    # Arithmetic
    def __bool__(self):
        return bool(self.coords)

    def __add__(self, other):
        other = self._other(other)
        if other is None:
            return NotImplemented
        coords = dict(self.coords)
        for key, q in other.coords.items():
            coords[key] = coords.get(key, 0) + q
        return NumberFieldElement(self.field, coords)

    __radd__ = __add__

    def __neg__(self):
        return NumberFieldElement(self.field, {k: -q for k, q in self.coords.items()})

    def __sub__(self, other):
        other = self._other(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._other(other)
        if other is None:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Fraction(other)
            return NumberFieldElement(self.field, {k: q * other for k, q in self.coords.items()})
        other = self._other(other)
        if other is None:
            return NotImplemented
        return NumberFieldElement(self.field, self.field.multiply_coords(self.coords, other.coords))

    __rmul__ = __mul__

    def inverse(self):
        return self.field.invert(self)

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            if not other:
                raise FieldDivisionByZero("division by zero")
            return self * (1 / Fraction(other))
        other = self._other(other)
        if other is None:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        other = self._other(other)
        if other is None:
            return NotImplemented
        return other * self.inverse()

    def __pow__(self, exponent):
        if exponent < 0:
            return self.inverse() ** (-exponent)
        result = self.field.one
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    def conjugate(self):
        return self.field.conjugate(self)

    # Comparison
    def __eq__(self, other):
        if isinstance(other, NumberFieldElement) and other.field == self.field:
            return self.coords == other.coords
        try:
            other = self._other(other)
        except FieldMismatchError:
            return False
        if other is None:
            return NotImplemented
        return self.coords == other.coords

    def __hash__(self):
        if self.is_rational():
            return hash(self.rational_value())
        return hash(frozenset(self.coords.items()))

    # Rendering
    def terms(self):
        """(monomial text, Fraction) pairs in a deterministic order."""
        keys = sorted(self.coords, key=lambda k: (sum(k), k))
        return [(self.field.render_monomial(k), self.coords[k]) for k in keys]

    def __str__(self):
        from .exprparse import render_scalar
        return render_scalar(self)

    def __repr__(self):
        return f"NumberFieldElement({self})"


def is_scalar(value):
    return isinstance(value, (int, Fraction, NumberFieldElement))


def conjugate_scalar(field, value):
    """Conjugate a scalar of field (identity on rationals)."""
    if isinstance(value, NumberFieldElement):
        return value.field.conjugate(value)
    return field.conjugate(value) if field.ngens else Fraction(value)


RATIONALS = NumberField()
