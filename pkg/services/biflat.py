"""
Bi-flat F-manifold engine.

This module handles:
- Chart-tagged tensors: Connection, ProductStructure, VectorField
- Two evaluation levels sharing one set of formulas:
  symbolic (exact quotients over a shared denominator basis) and
  sampled (first-order jets at exact rational points)
- Dual and natural products, natural and dual connections, curvature
- Compatibility, almost hydrodynamic equivalence, Lie and unit checks
- Chart changes between the p-chart and the frame of the invariants u
- Diagonal scaling equivalence of vector potentials
"""

import logging
from fractions import Fraction

from .errors import (
    ChartMismatchError, DivisibilityError, InvariantViolation, NotAnInvariantError,
    SingularMatrixError
)
from .multipoly import (
    MultiPolynomial, PolyMatrix, PolyRing, RationalFunction, adjugate, determinant,
    express_in_invariants
)
from .numberfield import NumberFieldElement

logger = logging.getLogger(__name__)

P_CHART = 'p'
U_CHART = 'u'

SCALARS = (int, Fraction, NumberFieldElement)


# Symbolic level: quotients over a shared denominator basis
class DenominatorBasis:
    """Parameter-free polynomials D_0, D_1, ... that may appear in denominators."""

    def __init__(self, ring):
        self.ring = ring
        self.polys = []
        self._partials = []
        self._powers = {}

    def index(self, poly):
        for i, known in enumerate(self.polys):
            if known == poly:
                return i
        self.polys.append(poly)
        self._partials.append([poly.partial(v) for v in self.ring.coords])
        return len(self.polys) - 1

    def partial(self, i, m):
        return self._partials[i][m]

    def power(self, i, e):
        key = (i, e)
        if key not in self._powers:
            self._powers[key] = self.polys[i] ** e
        return self._powers[key]

    def product(self, exps):
        acc = None
        for i, e in enumerate(exps):
            if e:
                acc = self.power(i, e) if acc is None else acc * self.power(i, e)
        return acc


def _pad(exps, size):
    return tuple(exps) + (0,) * (size - len(exps))


class Quotient:
    """num / prod(D_i^e_i) with the D_i taken from a DenominatorBasis."""

    __slots__ = ('basis', 'num', 'exps')

    def __init__(self, basis, num, exps=()):
        exps = list(exps)
        while exps and not exps[-1]:
            exps.pop()
        self.basis = basis
        self.num = num
        self.exps = tuple(exps) if num else ()

    def _coerce(self, other):
        if isinstance(other, Quotient):
            return other
        if isinstance(other, MultiPolynomial):
            return Quotient(self.basis, other)
        if isinstance(other, SCALARS):
            return Quotient(self.basis, self.basis.ring.const(other))
        return None

    def __bool__(self):
        return bool(self.num)

    def is_zero(self):
        return not self.num

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        if not other.num:
            return self
        if not self.num:
            return other
        if self.exps == other.exps:
            return Quotient(self.basis, self.num + other.num, self.exps)
        size = max(len(self.exps), len(other.exps))
        a, b = _pad(self.exps, size), _pad(other.exps, size)
        top = tuple(max(x, y) for x, y in zip(a, b))
        left = self.basis.product([t - x for t, x in zip(top, a)])
        right = self.basis.product([t - y for t, y in zip(top, b)])
        num = (self.num if left is None else self.num * left) + (other.num if right is None else other.num * right)
        return Quotient(self.basis, num, top)

    __radd__ = __add__

    def __neg__(self):
        return Quotient(self.basis, -self.num, self.exps)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        if isinstance(other, SCALARS):
            return Quotient(self.basis, self.num * other, self.exps)
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        if not self.num or not other.num:
            return Quotient(self.basis, self.basis.ring.zero())
        size = max(len(self.exps), len(other.exps))
        exps = tuple(x + y for x, y in zip(_pad(self.exps, size), _pad(other.exps, size)))
        return Quotient(self.basis, self.num * other.num, exps)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, SCALARS):
            return Quotient(self.basis, self.num / other, self.exps)
        return NotImplemented

    def partial(self, m):
        dnum = self.num.partial(m)
        active = [i for i, e in enumerate(self.exps) if e]
        if not active:
            return Quotient(self.basis, dnum, self.exps)
        full = self.basis.product([1 if e else 0 for e in self.exps])
        correction = None
        for i in active:
            term = self.basis.partial(i, m)
            if not term:
                continue
            others = [1 if (e and j != i) else 0 for j, e in enumerate(self.exps)]
            rest = self.basis.product(others)
            term = term * self.exps[i] if rest is None else term * rest * self.exps[i]
            correction = term if correction is None else correction + term
        num = dnum * full
        if correction is not None:
            num = num - self.num * correction
        return Quotient(self.basis, num, tuple(e + 1 if e else 0 for e in self.exps))

    def denominator(self):
        den = self.basis.product(self.exps)
        return den if den is not None else self.basis.ring.one()

    def to_rational(self):
        return RationalFunction(self.num, self.denominator())

    def as_polynomial(self):
        """Exact polynomial value; DivisibilityError when a denominator survives."""
        num = self.num
        for i, e in enumerate(self.exps):
            for _ in range(e):
                num = num.exact_divide(self.basis.polys[i])
        return num

    def __str__(self):
        return str(self.to_rational())

    __repr__ = __str__


# Sampled level: first-order jets at a point
class Jet:
    """Value and first p-derivatives at a fixed point, each a polynomial in the unknown constants."""

    __slots__ = ('value', 'grad')

    def __init__(self, value, grad):
        self.value = value
        self.grad = grad

    def _coerce(self, other):
        if isinstance(other, Jet):
            return other
        if isinstance(other, MultiPolynomial):
            return Jet(other, [other.ring.zero()] * len(self.grad))
        if isinstance(other, SCALARS):
            value = self.value.ring.const(other)
            return Jet(value, [value.ring.zero()] * len(self.grad))
        return None

    def __bool__(self):
        return bool(self.value) or any(self.grad)

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return Jet(self.value + other.value, [a + b for a, b in zip(self.grad, other.grad)])

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.value, [-g for g in self.grad])

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return Jet(self.value - other.value, [a - b for a, b in zip(self.grad, other.grad)])

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other - self

    def __mul__(self, other):
        if isinstance(other, SCALARS):
            return Jet(self.value * other, [g * other for g in self.grad])
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return Jet(self.value * other.value,
                   [a * other.value + self.value * b for a, b in zip(self.grad, other.grad)])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, SCALARS):
            return Jet(self.value / other, [g / other for g in self.grad])
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        if not other.value.is_constant():
            raise InvariantViolation("jet division by a value that depends on the unknown constants")
        v = other.value.constant_value()
        if not v:
            raise ZeroDivisionError("jet division by zero")
        return Jet(self.value / v, [(a * v - self.value * b) / (v * v) for a, b in zip(self.grad, other.grad)])

    def __repr__(self):
        return f"Jet({self.value}, {self.grad})"


def _det(rows):
    """Laplace expansion; only ring operations, so it works for jets and quotients."""
    n = len(rows)
    if n == 1:
        return rows[0][0]
    if n == 2:
        return rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]
    total = None
    for j in range(n):
        entry = rows[0][j]
        if not entry:
            continue
        minor = [row[:j] + row[j + 1:] for row in rows[1:]]
        term = entry * _det(minor)
        if j % 2:
            term = -term
        total = term if total is None else total + term
    return total if total is not None else rows[0][0] * 0


def _adj(rows, one):
    n = len(rows)
    if n == 1:
        return [[one]]
    out = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [row[:j] + row[j + 1:] for r, row in enumerate(rows) if r != i]
            cofactor = _det(minor)
            out[j][i] = cofactor if (i + j) % 2 == 0 else -cofactor
    return out


class SymbolicLevel:
    """Exact functions of p; derivatives are exact partial derivatives."""

    name = 'symbolic'

    def __init__(self, ring):
        self.ring = ring
        self.n = ring.ncoords
        self.basis = DenominatorBasis(ring)

    def lift(self, poly):
        return Quotient(self.basis, poly)

    def const(self, value):
        return Quotient(self.basis, self.ring.const(value))

    def coordinate(self, a):
        return Quotient(self.basis, self.ring.var(self.ring.coords[a]))

    def inverse_linear(self, form):
        i = self.basis.index(form)
        return Quotient(self.basis, self.ring.one(), (0,) * i + (1,))

    def inverse_matrix(self, polys):
        matrix = PolyMatrix(polys)
        det = determinant(matrix)
        if not det:
            raise SingularMatrixError("Jacobian matrix is singular")
        if any(any(key[self.n:]) for key in det.terms):
            raise InvariantViolation("det J depends on the unknown constants")
        adj = adjugate(matrix)
        i = self.basis.index(det)
        exps = (0,) * i + (1,)
        return [[Quotient(self.basis, adj[a, l], exps) for l in range(self.n)] for a in range(self.n)]

    @staticmethod
    def val(x):
        return x

    @staticmethod
    def d(x, m):
        return x.partial(m)

    @staticmethod
    def is_zero(plain):
        return not plain

    @staticmethod
    def conditions(plain):
        if not plain:
            return []
        return [c for c in plain.num.coefficients_in('coords').values() if c]

    @staticmethod
    def render(plain):
        return str(plain.num) if not plain.exps else str(plain)


class SampledLevel:
    """Exact jets at one rational point; identities are tested pointwise."""

    name = 'sampled'

    def __init__(self, ring, point):
        self.ring = ring
        self.n = ring.ncoords
        self.point = [ring.field.coerce(x) for x in point]
        self._zero = ring.zero()

    def _at(self, poly):
        return poly.at(self.point)

    def lift(self, poly):
        return Jet(self._at(poly), [self._at(poly.partial(m)) for m in range(self.n)])

    def const(self, value):
        return Jet(self.ring.const(value), [self._zero] * self.n)

    def coordinate(self, a):
        grad = [self.ring.one() if m == a else self._zero for m in range(self.n)]
        return Jet(self.ring.const(self.point[a]), grad)

    def inverse_linear(self, form):
        value = form.evaluate(self.point)
        if isinstance(value, MultiPolynomial):
            raise InvariantViolation("linear form depends on the unknown constants")
        if not value:
            raise ZeroDivisionError("sample point lies on a mirror")
        inv = 1 / value
        grad = []
        for m in range(self.n):
            coeff = form.partial(m)
            grad.append(self.ring.const(-coeff.constant_value() * inv * inv) if coeff else self._zero)
        return Jet(self.ring.const(inv), grad)

    def inverse_matrix(self, polys):
        n = self.n
        values = [[self._at(f) for f in row] for row in polys]
        det = _det(values)
        if not det.is_constant():
            raise InvariantViolation("det J depends on the unknown constants")
        det = det.constant_value()
        if not det:
            raise ZeroDivisionError("det J vanishes at the sample point")
        inv_det = 1 / det
        adj = _adj(values, self.ring.one())
        K = [[adj[a][l] * inv_det for l in range(n)] for a in range(n)]
        grads = []
        for m in range(n):
            dJ = [[self._at(f.partial(m)) for f in row] for row in polys]
            KdJ = [[sum((K[a][l] * dJ[l][b] for l in range(n)), self._zero) for b in range(n)] for a in range(n)]
            grads.append([[-sum((KdJ[a][b] * K[b][l] for b in range(n)), self._zero) for l in range(n)]
                          for a in range(n)])
        return [[Jet(K[a][l], [grads[m][a][l] for m in range(n)]) for l in range(n)] for a in range(n)]

    @staticmethod
    def val(x):
        return x.value

    @staticmethod
    def d(x, m):
        return x.grad[m]

    @staticmethod
    def is_zero(plain):
        return not plain

    @staticmethod
    def conditions(plain):
        return [plain] if plain else []

    @staticmethod
    def render(plain):
        return str(plain)


def make_level(ring, point=None):
    return SymbolicLevel(ring) if point is None else SampledLevel(ring, point)


# Chart-tagged tensors
class Tensor:
    kind = 'tensor'

    def __init__(self, chart, components, level):
        if chart not in (P_CHART, U_CHART):
            raise ChartMismatchError(f"unknown chart {chart!r}")
        self.chart = chart
        self.components = components
        self.level = level

    @property
    def n(self):
        return self.level.n

    def require_chart(self, other):
        if other.chart != self.chart:
            raise ChartMismatchError(f"{self.kind} in the {self.chart}-chart combined with "
                                     f"{other.kind} in the {other.chart}-chart")
        if other.level is not self.level:
            raise ChartMismatchError(f"{self.kind} and {other.kind} come from different evaluation levels")

    def __getitem__(self, index):
        return self.components[index]


class Connection(Tensor):
    """Christoffel symbols gamma[i][j][k] = Gamma^i_jk."""
    kind = 'connection'


class ProductStructure(Tensor):
    """Structure constants c[i][j][k] = c^i_jk, optionally over a common scale: c = components / scale."""
    kind = 'product'

    def __init__(self, chart, components, level, scale=None):
        super().__init__(chart, components, level)
        self.scale = scale


class VectorField(Tensor):
    kind = 'vector field'


def _range3(n):
    return [(i, j, k) for i in range(n) for j in range(n) for k in range(n)]


def _zero_tensor(level, n):
    return [[[level.const(0) for _ in range(n)] for _ in range(n)] for _ in range(n)]


class Residual:
    """Nonzero components of a tensor that should vanish."""

    def __init__(self, name, level, entries):
        self.name = name
        self.level = level
        self.entries = [(index, plain) for index, plain in entries if not level.is_zero(plain)]

    @property
    def passed(self):
        return not self.entries

    def conditions(self):
        out = []
        for _, plain in self.entries:
            out.extend(self.level.conditions(plain))
        return out

    def witness(self, limit=160):
        if not self.entries:
            return ''
        index, plain = self.entries[0]
        text = self.level.render(plain)
        if len(text) > limit:
            text = text[:limit] + '...'
        return f"{self.name}{list(index)} = {text}"


# Invariant frames
class Frame:
    """Derivatives of the invariants u(p) at one level: J, H and K = J^-1."""

    def __init__(self, level, invariants):
        self.level = level
        self.invariants = list(invariants)
        n = self.n = len(self.invariants)
        if n != level.n:
            raise InvariantViolation(f"{n} invariants for {level.n} coordinates")
        self.jacobian_polys = [[u.partial(a) for a in range(n)] for u in self.invariants]
        self.J = [[level.lift(f) for f in row] for row in self.jacobian_polys]
        self.H = []
        for row in self.jacobian_polys:
            block = [[None] * n for _ in range(n)]
            for a in range(n):
                for b in range(a, n):
                    block[a][b] = block[b][a] = level.lift(row[a].partial(b))
            self.H.append(block)
        self.K = level.inverse_matrix(self.jacobian_polys)


def dual_product_from_invariants(frame, degrees):
    """c*^i_jk = sum_l 1/(d_l - 1) * d_j d_k u^l * (J^-1)^i_l."""
    n, level = frame.n, frame.level
    weights = []
    for d in degrees:
        if d == 1:
            raise InvariantViolation("degree 1 invariant has no dual product weight")
        weights.append(Fraction(1, d - 1))
    c = [[[None] * n for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            for k in range(j, n):
                acc = level.const(0)
                for l in range(n):
                    acc = acc + frame.H[l][j][k] * frame.K[i][l] * weights[l]
                c[i][j][k] = c[i][k][j] = acc
    return ProductStructure(P_CHART, c, level)


def natural_connection(frame):
    """Gamma^i_jk = d_j d_k u^m (J^-1)^i_m: the trivial connection of the u-chart seen in p."""
    n, level = frame.n, frame.level
    g = [[[None] * n for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            for k in range(j, n):
                acc = level.const(0)
                for m in range(n):
                    acc = acc + frame.H[m][j][k] * frame.K[i][m]
                g[i][j][k] = g[i][k][j] = acc
    return Connection(P_CHART, g, level)


def unit_field(frame):
    """e = d/du^n in the p-chart."""
    return VectorField(P_CHART, [frame.K[a][frame.n - 1] for a in range(frame.n)], frame.level)


def euler_field(level):
    """E = sum p^k d/dp^k."""
    return VectorField(P_CHART, [level.coordinate(a) for a in range(level.n)], level)


def lift_log_tensor(level, terms, n):
    """Assemble sum_s T_s^i_jk / alpha_s(p) from (T_s, alpha_s) pairs."""
    c = _zero_tensor(level, n)
    for coeffs, form in terms:
        inverse = level.inverse_linear(form)
        for i, j, k in _range3(n):
            if k < j:
                continue
            value = coeffs[i][j][k]
            if value:
                c[i][j][k] = c[i][j][k] + inverse * value
    for i, j, k in _range3(n):
        if k < j:
            c[i][j][k] = c[i][k][j]
    return c


def dual_connection_standard(cstar):
    """Gamma2^i_jk = -c*^i_jk."""
    n = cstar.n
    g = [[[-cstar[i][j][k] for k in range(n)] for j in range(n)] for i in range(n)]
    return Connection(cstar.chart, g, cstar.level)


def family_dual_connection(cstar, correction, lam):
    """Gamma2 = -c* + lam * C; lam may be a scalar or a polynomial in the unknown constants."""
    level, n = cstar.level, cstar.n
    if isinstance(lam, MultiPolynomial):
        lam = level.lift(lam)
    g = [[[None] * n for _ in range(n)] for _ in range(n)]
    for i, j, k in _range3(n):
        g[i][j][k] = -cstar[i][j][k] + correction[i][j][k] * lam
    return Connection(cstar.chart, g, level)


def natural_product_from_dual(cstar, e):
    """c = (e*)^-1 c*, kept as adj(e*) c* over the scale det(e*)."""
    cstar.require_chart(e)
    level, n = cstar.level, cstar.n
    X = [[None] * n for _ in range(n)]
    for i in range(n):
        for k in range(n):
            acc = level.const(0)
            for j in range(n):
                acc = acc + cstar[i][j][k] * e[j]
            X[i][k] = acc
    Q = _det(X)
    if not Q:
        raise SingularMatrixError("multiplication by the unit field is not invertible")
    adj = _adj(X, level.const(1))
    N = [[[None] * n for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            for k in range(j, n):
                acc = level.const(0)
                for m in range(n):
                    acc = acc + adj[i][m] * cstar[m][j][k]
                N[i][j][k] = N[i][k][j] = acc
    return ProductStructure(cstar.chart, N, level, scale=Q)


# Checks
def curvature(conn):
    """R^i_jkl = d_k G^i_lj - d_l G^i_kj + G^i_km G^m_lj - G^i_lm G^m_kj for k < l."""
    level, n, G = conn.level, conn.n, conn.components
    val, d = level.val, level.d
    V = [[[val(G[i][j][k]) for k in range(n)] for j in range(n)] for i in range(n)]
    entries = []
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(k + 1, n):
                    acc = d(G[i][l][j], k) - d(G[i][k][j], l)
                    for m in range(n):
                        acc = acc + V[i][k][m] * V[m][l][j] - V[i][l][m] * V[m][k][j]
                    entries.append(((i, j, k, l), acc))
    return Residual('curvature', level, entries)


def product_compatibility(conn, prod):
    """(nabla_k c)^i_jl - (nabla_j c)^i_kl, multiplied by scale^2 when the product carries one."""
    conn.require_chart(prod)
    level, n = conn.level, conn.n
    val, d = level.val, level.d
    G, N = conn.components, prod.components
    Q = prod.scale
    GV = [[[val(G[i][j][k]) for k in range(n)] for j in range(n)] for i in range(n)]
    NV = [[[val(N[i][j][k]) for k in range(n)] for j in range(n)] for i in range(n)]
    QV = val(Q) if Q is not None else None

    def covariant(k, i, j, l):
        if Q is None:
            acc = d(N[i][j][l], k)
        else:
            acc = d(N[i][j][l], k) * QV - NV[i][j][l] * d(Q, k)
        gamma = None
        for m in range(n):
            term = GV[i][k][m] * NV[m][j][l] - GV[m][k][j] * NV[i][m][l] - GV[m][k][l] * NV[i][j][m]
            gamma = term if gamma is None else gamma + term
        return acc + (gamma * QV if Q is not None else gamma)

    entries = []
    for i in range(n):
        for l in range(n):
            for j in range(n):
                for k in range(j + 1, n):
                    entries.append(((i, j, k, l), covariant(k, i, j, l) - covariant(j, i, k, l)))
    return Residual('compatibility', level, entries)


def almost_hydro_check(conn1, conn2, prod):
    """sum_l (G1 - G2)^k_lj c^l_mi antisymmetrized in i, j."""
    conn1.require_chart(conn2)
    conn1.require_chart(prod)
    level, n = conn1.level, conn1.n
    val = level.val
    D = [[[val(conn1[k][l][j]) - val(conn2[k][l][j]) for j in range(n)] for l in range(n)] for k in range(n)]
    C = [[[val(prod[l][m][i]) for i in range(n)] for m in range(n)] for l in range(n)]
    entries = []
    for k in range(n):
        for m in range(n):
            for i in range(n):
                for j in range(i + 1, n):
                    acc = None
                    for l in range(n):
                        term = D[k][l][j] * C[l][m][i] - D[k][l][i] * C[l][m][j]
                        acc = term if acc is None else acc + term
                    entries.append(((k, m, i, j), acc))
    return Residual('almost_hydro', level, entries)


def commutativity_check(prod):
    level, n = prod.level, prod.n
    entries = [((i, j, k), level.val(prod[i][j][k]) - level.val(prod[i][k][j]))
               for i in range(n) for j in range(n) for k in range(j + 1, n)]
    return Residual('commutativity', level, entries)


def associativity_check(prod):
    """c^i_jl c^l_km - c^i_kl c^l_jm (the scale cancels)."""
    level, n = prod.level, prod.n
    V = [[[level.val(prod[i][j][k]) for k in range(n)] for j in range(n)] for i in range(n)]
    entries = []
    for i in range(n):
        for m in range(n):
            for j in range(n):
                for k in range(j + 1, n):
                    acc = None
                    for l in range(n):
                        term = V[i][j][l] * V[l][k][m] - V[i][k][l] * V[l][j][m]
                        acc = term if acc is None else acc + term
                    entries.append(((i, j, k, m), acc))
    return Residual('associativity', level, entries)


def unit_check(prod, unit, name='unit'):
    """c^i_jk X^k - delta^i_j (times the scale)."""
    prod.require_chart(unit)
    level, n = prod.level, prod.n
    val = level.val
    scale = val(prod.scale) if prod.scale is not None else level.val(level.const(1))
    entries = []
    for i in range(n):
        for j in range(n):
            acc = None
            for k in range(n):
                term = val(prod[i][j][k]) * val(unit[k])
                acc = term if acc is None else acc + term
            if i == j:
                acc = acc - scale
            entries.append(((i, j), acc))
    return Residual(name, level, entries)


def lie_checks(prod, E, e, top_degree, normalized=False):
    """
    Residuals of Lie_E c - d_n c and [e, E] - d_n e (p-chart, E = sum p^k d_k).

    With normalized=True the same identities are written for E/d_n, which
    divides every residual by d_n without changing which ones vanish.
    """
    prod.require_chart(E)
    prod.require_chart(e)
    level, n = prod.level, prod.n
    val, d = level.val, level.d
    P = [val(E[m]) for m in range(n)]
    Q = prod.scale
    scale = Fraction(1, top_degree) if normalized else 1
    entries = []
    for i in range(n):
        for j in range(n):
            for k in range(j, n):
                N = prod[i][j][k]
                NV = val(N)
                if Q is None:
                    acc = NV * (1 - top_degree)
                    for m in range(n):
                        acc = acc + P[m] * d(N, m)
                else:
                    QV = val(Q)
                    acc = NV * QV * (1 - top_degree)
                    for m in range(n):
                        acc = acc + P[m] * (d(N, m) * QV - NV * d(Q, m))
                entries.append(((i, j, k), acc * scale))
    product_residual = Residual('lie_product', level, entries)
    bracket = []
    for a in range(n):
        acc = val(e[a]) * (1 - top_degree)
        for m in range(n):
            acc = acc - P[m] * d(e[a], m)
        bracket.append(((a,), acc * scale))
    return {'lie_product': product_residual, 'euler_bracket': Residual('euler_bracket', level, bracket)}


def dual_homogeneity_check(cstar, E):
    """Lie_E c* = E(c*) + c* vanishes for a product of degree -1."""
    level, n = cstar.level, cstar.n
    val, d = level.val, level.d
    P = [val(E[m]) for m in range(n)]
    entries = []
    for i in range(n):
        for j in range(n):
            for k in range(j, n):
                acc = val(cstar[i][j][k])
                for m in range(n):
                    acc = acc + P[m] * d(cstar[i][j][k], m)
                entries.append(((i, j, k), acc))
    return Residual('lie_dual', level, entries)


def nabla_nabla_euler(conn, E):
    """(nabla nabla E)^i_jk with E = sum p^k d_k."""
    conn.require_chart(E)
    level, n = conn.level, conn.n
    val, d = level.val, level.d
    G = conn.components
    GV = [[[val(G[i][j][k]) for k in range(n)] for j in range(n)] for i in range(n)]
    P = [val(E[m]) for m in range(n)]
    one = val(level.const(1))
    # A^i_k = nabla_k E^i = delta^i_k + G^i_km p^m
    A = [[None] * n for _ in range(n)]
    for i in range(n):
        for k in range(n):
            acc = one if i == k else one * 0
            for m in range(n):
                acc = acc + GV[i][k][m] * P[m]
            A[i][k] = acc
    entries = []
    for i in range(n):
        for j in range(n):
            for k in range(n):
                acc = GV[i][k][j]
                for m in range(n):
                    acc = acc + d(G[i][k][m], j) * P[m]
                    acc = acc + GV[i][j][m] * A[m][k] - GV[m][j][k] * A[i][m]
                entries.append(((i, j, k), acc))
    return Residual('nabla_nabla_euler', level, entries)


def standard_saito_pde_check(frame, cstar, degrees):
    """d_j d_k u^i - (d_i - 1) c*^s_jk d_s u^i for every invariant."""
    level, n = frame.level, frame.n
    val = level.val
    entries = []
    for i in range(n):
        for j in range(n):
            for k in range(j, n):
                acc = val(frame.H[i][j][k])
                for s in range(n):
                    acc = acc - val(cstar[s][j][k]) * val(frame.J[i][s]) * (degrees[i] - 1)
                entries.append(((i, j, k), acc))
    return Residual('saito_pde', level, entries)


# Chart changes
def change_chart(obj, frame, direction='p->u'):
    """
    Transform a tensor between the p-chart and the frame of the invariants.

    Components stay functions of p; use express_in_u to rewrite them as
    polynomials in u when that is possible.
    """
    level, n = frame.level, frame.n
    if direction not in ('p->u', 'u->p'):
        raise ValueError(f"unknown direction {direction!r}")
    source, target = (P_CHART, U_CHART) if direction == 'p->u' else (U_CHART, P_CHART)
    if obj.chart != source:
        raise ChartMismatchError(f"{obj.kind} is in the {obj.chart}-chart, expected {source}")
    A, B = (frame.J, frame.K) if direction == 'p->u' else (frame.K, frame.J)
    zero = level.const(0)

    def dot(terms):
        acc = zero
        for term in terms:
            acc = acc + term
        return acc

    if isinstance(obj, VectorField):
        comps = [dot(A[i][a] * obj[a] for a in range(n)) for i in range(n)]
        return VectorField(target, comps, level)
    if isinstance(obj, ProductStructure):
        comps = _transform3(obj.components, A, B, n, zero)
        scale = obj.scale
        return ProductStructure(target, comps, level, scale=scale)
    if isinstance(obj, Connection):
        if level.name != 'symbolic':
            raise InvariantViolation("connections change chart at the symbolic level only")
        comps = _transform3(obj.components, A, B, n, zero)
        # second derivatives of the source coordinates along the target ones
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    extra = zero
                    for a in range(n):
                        if direction == 'u->p':
                            inner = level.d(B[a][k], j)
                        else:
                            inner = zero
                            for b in range(n):
                                inner = inner + B[b][j] * level.d(B[a][k], b)
                        extra = extra + A[i][a] * inner
                    comps[i][j][k] = comps[i][j][k] + extra
        return Connection(target, comps, level)
    raise ChartMismatchError(f"cannot change the chart of {obj!r}")


def _transform3(T, A, B, n, zero):
    """A^i_a T^a_bc B^b_j B^c_k."""
    step = [[[zero for _ in range(n)] for _ in range(n)] for _ in range(n)]
    for a in range(n):
        for b in range(n):
            for k in range(n):
                acc = zero
                for c in range(n):
                    acc = acc + T[a][b][c] * B[c][k]
                step[a][b][k] = acc
    step2 = [[[zero for _ in range(n)] for _ in range(n)] for _ in range(n)]
    for a in range(n):
        for j in range(n):
            for k in range(n):
                acc = zero
                for b in range(n):
                    acc = acc + step[a][b][k] * B[b][j]
                step2[a][j][k] = acc
    out = [[[zero for _ in range(n)] for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            for k in range(n):
                acc = zero
                for a in range(n):
                    acc = acc + A[i][a] * step2[a][j][k]
                out[i][j][k] = acc
    return out


def express_in_u(value, invariants, degrees, u_ring):
    """Rewrite a symbolic component (a quotient in p) as a polynomial in u."""
    if isinstance(value, Quotient):
        try:
            value = value.as_polynomial()
        except DivisibilityError:
            raise NotAnInvariantError("component is not a polynomial in p") from None
    if value.ring.params:
        value = value.to_ring(PolyRing(value.ring.field, value.ring.coords))
    return express_in_invariants(value, invariants, degrees, u_ring)


def product_in_u(prod, invariants, degrees, u_ring):
    """u-chart structure constants (scale divided out) as polynomials in u."""
    if prod.chart != U_CHART:
        raise ChartMismatchError("product_in_u needs a product in the u-chart")
    n = prod.n
    out = [[[None] * n for _ in range(n)] for _ in range(n)]
    for i, j, k in _range3(n):
        if k < j:
            out[i][j][k] = out[i][k][j]
            continue
        value = prod[i][j][k]
        if prod.scale is not None:
            value = divide_quotients(value, prod.scale)
        out[i][j][k] = express_in_u(value, invariants, degrees, u_ring)
    return out


def divide_quotients(a, b):
    """Exact polynomial a/b of two symbolic quotients."""
    num = a.num * b.denominator()
    den = a.denominator() * b.num
    try:
        return num.exact_divide(den)
    except DivisibilityError:
        raise NotAnInvariantError("quotient is not a polynomial in p") from None


# Scaling equivalence
def scaling_equivalence(pot_a, pot_b, degrees, free=()):
    """
    Find diagonal rescalings u_i -> l_i u_i (l_n = 1) with
    B^i(u) = A^i(l u) / l_i up to affine terms.

    free names constants of pot_b (family parameters) solved together with
    the l_i. Returns a list of solution dicts (possibly empty) and the
    unresolved equations, if any.
    """
    from .constsolver import ConditionSystem, solve_constants
    n = len(degrees)
    ring_a = pot_a[0].ring
    field = ring_a.field
    scales = [f"l{i + 1}" for i in range(n - 1)]
    unknowns = scales + list(free)
    ring = PolyRing(field, (), unknowns)
    lam = [ring.var(s) for s in scales] + [ring.one()]
    equations = []
    for i in range(n):
        a = pot_a[i].drop_affine()
        b = pot_b[i].drop_affine()
        keys = set()
        for poly in (a, b):
            keys.update(k[:n] for k in poly.terms)
        a_coeffs = a.coefficients_in('coords')
        b_coeffs = b.coefficients_in('coords')
        for key in sorted(keys):
            scale = ring.one()
            for lv, e in zip(lam, key):
                if e:
                    scale = scale * lv ** e
            left = _coeff_poly(a_coeffs.get(key), ring) * scale
            right = _coeff_poly(b_coeffs.get(key), ring) * lam[i]
            eq = left - right
            if eq:
                equations.append(eq)
    system = ConditionSystem(unknowns, equations)
    result = solve_constants(system, nonzero=scales)
    logger.info("Scaling equivalence: %d solution(s), %d unresolved", len(result.solutions), len(result.unresolved))
    return result


def _coeff_poly(poly, ring):
    if poly is None:
        return ring.zero()
    return poly.to_ring(ring)
