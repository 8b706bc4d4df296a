"""
Sparse multivariate polynomials, rational functions and polynomial matrices.

This module handles:
- Polynomial rings with a coordinate block (p or u) and a constant block (c1..ck, lam)
- Arithmetic, partial derivatives (coordinate block), evaluation and substitution
- Exact division, Bareiss determinants, adjugates and inverses
- Rational functions with an equal-denominator fast path
- Exact linear solving and rewriting of p-polynomials in the invariants u
"""

import random
from collections import defaultdict
from fractions import Fraction
from itertools import product as iter_product

from .errors import (
    AlgebraicDependenceError, DivisibilityError, NotAnInvariantError,
    SingularMatrixError, VariableMismatchError
)
from .numberfield import RATIONALS, NumberFieldElement


class PolyRing:
    """Variables of a polynomial ring over a number field."""

    def __init__(self, field, coords, params=()):
        self.field = field
        self.coords = tuple(coords)
        self.params = tuple(params)
        self.names = self.coords + self.params
        self.ncoords = len(self.coords)
        self.nvars = len(self.names)
        if len(set(self.names)) != self.nvars:
            raise VariableMismatchError(f"duplicate variable names in {self.names}")
        self._index = {name: i for i, name in enumerate(self.names)}

    def __eq__(self, other):
        return (isinstance(other, PolyRing) and self.names == other.names
                and self.ncoords == other.ncoords and self.field == other.field)

    def __hash__(self):
        return hash((self.names, self.ncoords))

    def __repr__(self):
        return f"PolyRing({self.field!r}, coords={self.coords}, params={self.params})"

    def index(self, name):
        if isinstance(name, int):
            return name
        try:
            return self._index[name]
        except KeyError:
            raise VariableMismatchError(f"variable {name} not in {self.names}") from None

    # Constructors
    def zero(self):
        return MultiPolynomial(self, {})

    def one(self):
        return self.const(1)

    def const(self, value):
        value = self.field.coerce(value)
        return MultiPolynomial(self, {(0,) * self.nvars: value} if value else {})

    def var(self, name):
        i = self.index(name)
        key = tuple(1 if j == i else 0 for j in range(self.nvars))
        return MultiPolynomial(self, {key: self.field.one})

    def variables(self):
        return [self.var(name) for name in self.coords]

    def with_params(self, params):
        return PolyRing(self.field, self.coords, params)

    def with_field(self, field):
        return PolyRing(field, self.coords, self.params)


class MultiPolynomial:
    """Sparse polynomial: exponent tuples mapped to nonzero field scalars."""

    __slots__ = ('ring', 'terms')

    def __init__(self, ring, terms):
        self.ring = ring
        self.terms = {key: value for key, value in terms.items() if value}

    # Helpers
    def _lift(self, other):
        if isinstance(other, MultiPolynomial):
            if other.ring != self.ring:
                raise VariableMismatchError(f"cannot combine {other.ring} with {self.ring}")
            return other
        if isinstance(other, (int, Fraction, NumberFieldElement)):
            return self.ring.const(other)
        return None

    def copy(self):
        return MultiPolynomial(self.ring, dict(self.terms))

    def is_zero(self):
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def is_constant(self):
        return all(not any(key) for key in self.terms)

    def constant_value(self):
        return self.terms.get((0,) * self.ring.nvars, self.ring.field.zero)

    def coord_free(self):
        """True when no coordinate variable occurs."""
        n = self.ring.ncoords
        return all(not any(key[:n]) for key in self.terms)

    def __len__(self):
        return len(self.terms)

    # Arithmetic
    def __add__(self, other):
        other = self._lift(other)
        if other is None:
            return NotImplemented
        terms = dict(self.terms)
        for key, value in other.terms.items():
            current = terms.get(key)
            terms[key] = value if current is None else current + value
        return MultiPolynomial(self.ring, terms)

    __radd__ = __add__

    def __neg__(self):
        return MultiPolynomial(self.ring, {key: -value for key, value in self.terms.items()})

    def __sub__(self, other):
        other = self._lift(other)
        if other is None:
            return NotImplemented
        terms = dict(self.terms)
        for key, value in other.terms.items():
            current = terms.get(key)
            terms[key] = -value if current is None else current - value
        return MultiPolynomial(self.ring, terms)

    def __rsub__(self, other):
        other = self._lift(other)
        if other is None:
            return NotImplemented
        return other - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, NumberFieldElement)):
            if not other:
                return self.ring.zero()
            return MultiPolynomial(self.ring, {k: v * other for k, v in self.terms.items()})
        other = self._lift(other)
        if other is None:
            return NotImplemented
        if len(other.terms) == 1:
            (okey, ovalue), = other.terms.items()
            return MultiPolynomial(self.ring, {
                tuple(a + b for a, b in zip(key, okey)): value * ovalue
                for key, value in self.terms.items()})
        result = defaultdict(int)
        for akey, avalue in self.terms.items():
            for bkey, bvalue in other.terms.items():
                key = tuple(a + b for a, b in zip(akey, bkey))
                result[key] = result[key] + avalue * bvalue
        return MultiPolynomial(self.ring, result)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, MultiPolynomial):
            if other.is_constant():
                other = other.constant_value()
            else:
                return RationalFunction(self, other)
        inverse = 1 / self.ring.field.coerce(other)
        return self * inverse

    def __pow__(self, exponent):
        if exponent < 0:
            raise ValueError("negative exponent")
        result = self.ring.one()
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            exponent >>= 1
            if exponent:
                base = base * base
        return result

    def __eq__(self, other):
        if isinstance(other, RationalFunction):
            return other == self
        other = self._lift(other)
        if other is None:
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    # Calculus
    def partial(self, var):
        """Partial derivative with respect to a coordinate or parameter."""
        i = self.ring.index(var)
        terms = {}
        for key, value in self.terms.items():
            e = key[i]
            if e:
                new = key[:i] + (e - 1,) + key[i + 1:]
                terms[new] = value * e
        return MultiPolynomial(self.ring, terms)

    def gradient(self):
        return [self.partial(i) for i in range(self.ring.ncoords)]

    def evaluate(self, values):
        """
        Substitute scalar values for some variables.

        values maps names (or indices) to scalars; a sequence assigns the
        coordinate block in order. Returns a scalar when nothing but a
        constant is left, otherwise a polynomial in the same ring.
        """
        if not isinstance(values, dict):
            values = {i: v for i, v in enumerate(values)}
        assigned = {self.ring.index(k): self.ring.field.coerce(v) for k, v in values.items()}
        powers = {}
        terms = defaultdict(int)
        for key, value in self.terms.items():
            coeff = value
            new = list(key)
            for i, scalar in assigned.items():
                e = key[i]
                if e:
                    cached = powers.get((i, e))
                    if cached is None:
                        cached = scalar ** e
                        powers[(i, e)] = cached
                    coeff = coeff * cached
                    new[i] = 0
            if coeff:
                new = tuple(new)
                terms[new] = terms[new] + coeff
        result = MultiPolynomial(self.ring, terms)
        if result.is_constant():
            return result.constant_value()
        return result

    def at(self, point):
        """Evaluate the coordinate block at point; the result keeps the parameter block."""
        value = self.evaluate({i: v for i, v in enumerate(point)})
        return value if isinstance(value, MultiPolynomial) else self.ring.const(value)

    def variables_used(self):
        used = set()
        for key in self.terms:
            used.update(i for i, e in enumerate(key) if e)
        return used

    def substitute(self, mapping):
        """Compose: replace variables (names or indices) by polynomials of the same ring."""
        mapping = {self.ring.index(k): self._lift(v) for k, v in mapping.items()}
        powers = {}
        result = self.ring.zero()
        groups = defaultdict(dict)
        for key, value in self.terms.items():
            sub_key = tuple(key[i] for i in sorted(mapping))
            rest = tuple(0 if i in mapping else e for i, e in enumerate(key))
            groups[sub_key][rest] = value
        order = sorted(mapping)
        for sub_key, rest_terms in groups.items():
            factor = self.ring.one()
            for i, e in zip(order, sub_key):
                if e:
                    cached = powers.get((i, e))
                    if cached is None:
                        cached = mapping[i] ** e
                        powers[(i, e)] = cached
                    factor = factor * cached
            result = result + MultiPolynomial(self.ring, rest_terms) * factor
        return result

    def to_ring(self, ring):
        """Re-express in another ring by variable name (missing variables must not occur)."""
        if ring == self.ring:
            return self
        positions = []
        for i, name in enumerate(self.ring.names):
            positions.append(ring._index.get(name))
        terms = {}
        for key, value in self.terms.items():
            new = [0] * ring.nvars
            for i, e in enumerate(key):
                if e:
                    if positions[i] is None:
                        raise VariableMismatchError(f"variable {self.ring.names[i]} not in {ring.names}")
                    new[positions[i]] = e
            terms[tuple(new)] = ring.field.coerce(value)
        return MultiPolynomial(ring, terms)

    def map_coefficients(self, func):
        return MultiPolynomial(self.ring, {k: func(v) for k, v in self.terms.items()})

    def conjugate(self):
        field = self.ring.field
        return self.map_coefficients(lambda v: field.conjugate(v) if field.ngens else v)

    # Degrees
    def total_degree(self):
        n = self.ring.ncoords
        return max((sum(key[:n]) for key in self.terms), default=-1)

    def weighted_degree(self, weights):
        degrees = {sum(w * e for w, e in zip(weights, key)) for key in self.terms}
        if len(degrees) > 1:
            return None
        return degrees.pop() if degrees else None

    def is_isobaric(self, weights):
        return self.is_zero() or self.weighted_degree(weights) is not None

    def degree_in(self, var):
        i = self.ring.index(var)
        return max((key[i] for key in self.terms), default=-1)

    def homogeneous_components(self, weights=None):
        n = self.ring.ncoords
        weights = weights or [1] * n
        parts = defaultdict(dict)
        for key, value in self.terms.items():
            parts[sum(w * e for w, e in zip(weights, key[:n]))][key] = value
        return {deg: MultiPolynomial(self.ring, terms) for deg, terms in parts.items()}

    def coefficients_in(self, block='coords'):
        """
        Split into coefficient polynomials.

        With block='coords' the keys are coordinate exponent tuples and the
        values polynomials in the parameter block (same ring).
        """
        n = self.ring.ncoords
        parts = defaultdict(dict)
        for key, value in self.terms.items():
            if block == 'coords':
                parts[key[:n]][(0,) * n + key[n:]] = value
            else:
                parts[key[n:]][key[:n] + (0,) * (self.ring.nvars - n)] = value
        return {k: MultiPolynomial(self.ring, terms) for k, terms in parts.items()}

    def drop_affine(self):
        """Remove terms of coordinate degree at most one."""
        n = self.ring.ncoords
        return MultiPolynomial(self.ring, {k: v for k, v in self.terms.items() if sum(k[:n]) > 1})

    def leading_key(self):
        return max(self.terms, key=lambda k: (sum(k), k))

    # Division
    def exact_divide(self, other):
        """Return q with self = q * other; raise DivisibilityError otherwise."""
        other = self._lift(other)
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        if other.is_constant():
            return self / other.constant_value()
        lead_key = other.leading_key()
        lead_inv = 1 / self.ring.field.coerce(other.terms[lead_key])
        remainder = dict(self.terms)
        quotient = {}
        while remainder:
            key = max(remainder, key=lambda k: (sum(k), k))
            shift = tuple(a - b for a, b in zip(key, lead_key))
            if any(e < 0 for e in shift):
                raise DivisibilityError("polynomial is not divisible")
            factor = remainder[key] * lead_inv
            quotient[shift] = factor
            for okey, ovalue in other.terms.items():
                target = tuple(a + b for a, b in zip(okey, shift))
                updated = remainder.get(target, 0) - factor * ovalue
                if updated:
                    remainder[target] = updated
                else:
                    remainder.pop(target, None)
        return MultiPolynomial(self.ring, quotient)

    def divides(self, other):
        try:
            other.exact_divide(self)
            return True
        except DivisibilityError:
            return False

    def __str__(self):
        from .exprparse import render_expression
        return render_expression(self)

    def __repr__(self):
        return f"MultiPolynomial({self})"


def proportional(a, b):
    """Return r with a = r*b, or None (zero b only matches zero a)."""
    if b.is_zero():
        return a.ring.field.one if a.is_zero() else None
    if set(a.terms) != set(b.terms):
        return None
    key = next(iter(b.terms))
    ratio = a.terms[key] / b.terms[key]
    for k, value in b.terms.items():
        if a.terms[k] != value * ratio:
            return None
    return ratio


def weighted_monomials(weights, target, min_degree=0):
    """All exponent tuples e with sum(e_i * w_i) == target and sum(e) >= min_degree."""
    out = []

    def walk(i, remaining, acc):
        if i == len(weights):
            if remaining == 0 and sum(acc) >= min_degree:
                out.append(tuple(acc))
            return
        for e in range(remaining // weights[i] + 1):
            walk(i + 1, remaining - e * weights[i], acc + [e])

    if target >= 0:
        walk(0, target, [])
    return sorted(out, key=lambda k: tuple(reversed(k)), reverse=True)


def random_point(rng, n, bound=100):
    """Small random rationals (numerator and denominator at most bound)."""
    rng = rng or random.Random()
    return [Fraction(rng.choice((-1, 1)) * rng.randint(1, bound), rng.randint(1, bound)) for _ in range(n)]


# Rational functions
class RationalFunction:
    """numerator / denominator with exact normalization when possible."""

    __slots__ = ('num', 'den')

    def __init__(self, num, den=None):
        if den is None:
            den = num.ring.one()
        if den.is_zero():
            raise ZeroDivisionError("zero denominator")
        if den.is_constant():
            num = num / den.constant_value()
            den = num.ring.one()
        self.num = num
        self.den = den

    @property
    def ring(self):
        return self.num.ring

    def _lift(self, other):
        if isinstance(other, RationalFunction):
            return other
        if isinstance(other, MultiPolynomial):
            return RationalFunction(other)
        if isinstance(other, (int, Fraction, NumberFieldElement)):
            return RationalFunction(self.num.ring.const(other))
        return None

    def is_zero(self):
        return self.num.is_zero()

    def __bool__(self):
        return not self.num.is_zero()

    def is_polynomial(self):
        return self.den.is_constant()

    def reduced(self):
        """Cancel the denominator when it divides the numerator."""
        if self.den.is_constant():
            return self
        try:
            return RationalFunction(self.num.exact_divide(self.den))
        except DivisibilityError:
            return self

    def as_polynomial(self):
        reduced = self.reduced()
        if not reduced.den.is_constant():
            raise DivisibilityError("rational function is not a polynomial")
        return reduced.num

    def __add__(self, other):
        other = self._lift(other)
        if other is None:
            return NotImplemented
        if self.den == other.den:
            return RationalFunction(self.num + other.num, self.den)
        if other.den.is_constant():
            return RationalFunction(self.num + other.num * self.den, self.den)
        if self.den.is_constant():
            return RationalFunction(self.num * other.den + other.num, other.den)
        return RationalFunction(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __neg__(self):
        return RationalFunction(-self.num, self.den)

    def __sub__(self, other):
        other = self._lift(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._lift(other)
        if other is None:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, NumberFieldElement)):
            return RationalFunction(self.num * other, self.den)
        other = self._lift(other)
        if other is None:
            return NotImplemented
        return RationalFunction(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction, NumberFieldElement)):
            return RationalFunction(self.num / other, self.den)
        other = self._lift(other)
        if other is None:
            return NotImplemented
        if other.is_zero():
            raise ZeroDivisionError("division by zero rational function")
        return RationalFunction(self.num * other.den, self.den * other.num)

    def __rtruediv__(self, other):
        other = self._lift(other)
        if other is None:
            return NotImplemented
        return other / self

    def __pow__(self, exponent):
        return RationalFunction(self.num ** exponent, self.den ** exponent)

    def partial(self, var):
        if self.den.is_constant():
            return RationalFunction(self.num.partial(var))
        num = self.num.partial(var) * self.den - self.num * self.den.partial(var)
        return RationalFunction(num, self.den * self.den)

    def evaluate(self, values):
        num = self.num.evaluate(values)
        den = self.den.evaluate(values)
        if isinstance(den, MultiPolynomial):
            if not den.is_constant():
                return RationalFunction(_as_poly(num, self.ring), den)
            den = den.constant_value()
        return num / den

    def substitute(self, mapping):
        return RationalFunction(self.num.substitute(mapping), self.den.substitute(mapping))

    def __eq__(self, other):
        other = self._lift(other)
        if other is None:
            return NotImplemented
        return (self.num * other.den - other.num * self.den).is_zero()

    def __hash__(self):
        return hash((self.num, self.den))

    def __str__(self):
        if self.den.is_constant():
            return str(self.num)
        return f"({self.num})/({self.den})"

    __repr__ = __str__


def _as_poly(value, ring):
    return value if isinstance(value, MultiPolynomial) else ring.const(value)


# Matrices
class PolyMatrix:
    """Rectangular matrix of polynomials, rational functions or scalars."""

    def __init__(self, rows):
        self.rows = [list(row) for row in rows]
        self.shape = (len(self.rows), len(self.rows[0]) if self.rows else 0)
        if any(len(row) != self.shape[1] for row in self.rows):
            raise ValueError("matrix rows have different lengths")

    def __getitem__(self, index):
        i, j = index
        return self.rows[i][j]

    def __setitem__(self, index, value):
        i, j = index
        self.rows[i][j] = value

    def is_square(self):
        return self.shape[0] == self.shape[1]

    def transpose(self):
        return PolyMatrix(list(map(list, zip(*self.rows))))

    def map(self, func):
        return PolyMatrix([[func(x) for x in row] for row in self.rows])

    def __matmul__(self, other):
        n, m = self.shape
        m2, k = other.shape
        if m != m2:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        out = []
        for i in range(n):
            row = []
            for j in range(k):
                acc = None
                for t in range(m):
                    term = self.rows[i][t] * other.rows[t][j]
                    acc = term if acc is None else acc + term
                row.append(acc)
            out.append(row)
        return PolyMatrix(out)

    def __eq__(self, other):
        return isinstance(other, PolyMatrix) and self.shape == other.shape and all(
            a == b for ra, rb in zip(self.rows, other.rows) for a, b in zip(ra, rb))

    def minor(self, i, j):
        return PolyMatrix([row[:j] + row[j + 1:] for r, row in enumerate(self.rows) if r != i])

    def __repr__(self):
        return f"PolyMatrix({self.rows})"


def identity_matrix(ring_or_field, n):
    if isinstance(ring_or_field, PolyRing):
        one, zero = ring_or_field.one(), ring_or_field.zero()
    else:
        one, zero = ring_or_field.one, ring_or_field.zero
    return PolyMatrix([[one if i == j else zero for j in range(n)] for i in range(n)])


def jacobian(polys, variables=None):
    """J[i][j] = d polys[i] / d variables[j]."""
    if not polys:
        return PolyMatrix([])
    ring = polys[0].ring
    variables = list(variables) if variables is not None else list(ring.coords)
    if len(variables) != len(polys):
        raise VariableMismatchError(f"{len(polys)} functions for {len(variables)} variables")
    return PolyMatrix([[f.partial(v) for v in variables] for f in polys])


def _is_zero(x):
    if isinstance(x, (MultiPolynomial, RationalFunction)):
        return x.is_zero()
    return not x


def _divide(a, b):
    if isinstance(a, MultiPolynomial) and isinstance(b, MultiPolynomial):
        return a.exact_divide(b)
    return a / b


def determinant(matrix):
    """Fraction-free Bareiss elimination (exact division at each step)."""
    if not matrix.is_square():
        raise ValueError("determinant of a non-square matrix")
    n = matrix.shape[0]
    if n == 0:
        return 1
    m = [list(row) for row in matrix.rows]
    if n == 1:
        return m[0][0]
    if n == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    sign = 1
    prev = None
    for k in range(n - 1):
        if _is_zero(m[k][k]):
            swap = next((i for i in range(k + 1, n) if not _is_zero(m[i][k])), None)
            if swap is None:
                return m[k][k] * 0
            m[k], m[swap] = m[swap], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                value = m[i][j] * m[k][k] - m[i][k] * m[k][j]
                m[i][j] = value if prev is None else _divide(value, prev)
        prev = m[k][k]
    return m[n - 1][n - 1] if sign > 0 else -m[n - 1][n - 1]


def adjugate(matrix):
    """Transpose of the cofactor matrix."""
    n = matrix.shape[0]
    if n == 1:
        entry = matrix.rows[0][0]
        one = entry.ring.one() if isinstance(entry, MultiPolynomial) else 1
        return PolyMatrix([[one]])
    out = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            cofactor = determinant(matrix.minor(i, j))
            out[j][i] = cofactor if (i + j) % 2 == 0 else -cofactor
    return PolyMatrix(out)


def matrix_inverse(matrix):
    """Entries adj/det as rational functions (scalars for scalar matrices)."""
    det = determinant(matrix)
    if _is_zero(det):
        raise SingularMatrixError("matrix is singular")
    adj = adjugate(matrix)
    if isinstance(det, MultiPolynomial):
        return adj.map(lambda x: RationalFunction(x, det) if isinstance(x, MultiPolynomial) else x / det)
    return adj.map(lambda x: x / det)


# Linear algebra over the field
class LinearSolution:
    """Solution set of A x = b: particular solution plus kernel basis."""

    def __init__(self, consistent, particular=None, kernel=None):
        self.consistent = consistent
        self.particular = particular
        self.kernel = kernel or []

    @property
    def unique(self):
        return self.consistent and not self.kernel

    def __repr__(self):
        if not self.consistent:
            return "LinearSolution(infeasible)"
        return f"LinearSolution(particular={self.particular}, kernel_dim={len(self.kernel)})"


def row_reduce(rows, ncols):
    """Reduced row echelon form in place; returns pivot columns."""
    pivots = []
    r = 0
    for c in range(ncols):
        pivot = next((i for i in range(r, len(rows)) if rows[i][c]), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        inv = 1 / rows[r][c]
        rows[r] = [x * inv for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c]:
                factor = rows[i][c]
                rows[i] = [x - factor * y for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return pivots


def linear_solve(matrix, rhs, field=None):
    """Exact solve of matrix x = rhs over a number field."""
    field = field or RATIONALS
    rows = [[field.coerce(x) for x in row] + [field.coerce(b)] for row, b in zip(matrix, rhs)]
    ncols = len(matrix[0]) if matrix else 0
    pivots = row_reduce(rows, ncols)
    for row in rows[len(pivots):]:
        if row[-1]:
            return LinearSolution(False)
    particular = [field.zero] * ncols
    for r, c in enumerate(pivots):
        particular[c] = rows[r][-1]
    free = [c for c in range(ncols) if c not in pivots]
    kernel = []
    for f in free:
        vector = [field.zero] * ncols
        vector[f] = field.one
        for r, c in enumerate(pivots):
            vector[c] = -rows[r][f]
        kernel.append(vector)
    return LinearSolution(True, particular, kernel)


def express_in_invariants(f, basis, weights, target_ring):
    """
    Rewrite a p-polynomial as a polynomial in the invariants.

    basis[i] is u^i(p) of weighted degree weights[i]. The unknown
    coefficients of every u-monomial of matching weighted degree are found
    by an exact linear solve on the p-coefficients.
    """
    field = f.ring.field
    result = target_ring.zero()
    power_cache = {}

    def basis_monomial(exps):
        key = tuple(exps)
        if key not in power_cache:
            acc = f.ring.one()
            for b, e in zip(basis, exps):
                if e:
                    acc = acc * b ** e
            power_cache[key] = acc
        return power_cache[key]

    for degree, part in sorted(f.homogeneous_components().items()):
        if part.is_zero():
            continue
        monomials = weighted_monomials(list(weights), degree)
        if not monomials:
            raise NotAnInvariantError(f"no invariant monomials of degree {degree}")
        expansions = [basis_monomial(m) for m in monomials]
        keys = sorted(set(part.terms).union(*[set(e.terms) for e in expansions]))
        matrix = [[e.terms.get(k, field.zero) for e in expansions] for k in keys]
        rhs = [part.terms.get(k, field.zero) for k in keys]
        solution = linear_solve(matrix, rhs, field)
        if not solution.consistent:
            raise NotAnInvariantError(f"degree-{degree} component is not in the invariant ring")
        if solution.kernel:
            raise AlgebraicDependenceError(f"invariant monomials of degree {degree} are dependent")
        for exps, coeff in zip(monomials, solution.particular):
            if coeff:
                key = tuple(exps) + (0,) * (target_ring.nvars - len(exps))
                result = result + MultiPolynomial(target_ring, {key: coeff})
    return result


def random_matrix(ring, n, rng, degree=2, bound=5):
    """Random polynomial matrix for property tests."""
    rows = []
    for _ in range(n):
        row = []
        for _ in range(n):
            terms = {}
            for key in iter_product(range(degree + 1), repeat=ring.ncoords):
                if sum(key) <= degree and rng.random() < 0.5:
                    terms[tuple(key) + (0,) * (ring.nvars - ring.ncoords)] = ring.field.coerce(
                        Fraction(rng.randint(-bound, bound)))
            row.append(MultiPolynomial(ring, terms))
        rows.append(row)
    return PolyMatrix(rows)
