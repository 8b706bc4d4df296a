"""
Expression language and group data-file reader.

This module handles:
- Tokenizing and recursive-descent parsing of expressions into a small AST
- Evaluating ASTs to exact polynomials or scalars in a parsing context
- Rendering polynomials and scalars back to the same language
- Reading keyed-section group data files (load_group_file)
"""

import os
import re
from dataclasses import dataclass
from fractions import Fraction
from math import isqrt

from .errors import ConfigurationError, ExpressionSyntaxError, GroupFileError, UndeclaredIdentifierError
from .multipoly import MultiPolynomial, PolyMatrix, PolyRing, determinant, weighted_monomials
from .numberfield import RATIONALS, NumberFieldElement


# Abstract syntax tree
@dataclass(frozen=True)
class Num:
    value: int
    line: int = 1
    column: int = 1


@dataclass(frozen=True)
class Name:
    name: str
    line: int = 1
    column: int = 1


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple
    line: int = 1
    column: int = 1


@dataclass(frozen=True)
class Unary:
    op: str
    operand: object
    line: int = 1
    column: int = 1


@dataclass(frozen=True)
class Binary:
    op: str
    left: object
    right: object
    line: int = 1
    column: int = 1


# Tokenizer
TOKEN_RE = re.compile(r'\s*(?:(\d+)|([A-Za-z_][A-Za-z0-9_]*)|(\*\*|[-+*/^(),])|(\S))')


@dataclass
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text, line=1):
    tokens = []
    pos = 0
    base_line, line_start = line, 0
    while pos < len(text):
        match = TOKEN_RE.match(text, pos)
        if match is None:
            break
        number, ident, op, bad = match.groups()
        start = match.start(match.lastindex)
        current_line = base_line + text.count('\n', 0, start)
        last_newline = text.rfind('\n', 0, start)
        column = start - last_newline if last_newline >= 0 else start - line_start + 1
        if bad is not None:
            raise ExpressionSyntaxError(f"unexpected character {bad!r}", current_line, column, text)
        if number is not None:
            tokens.append(Token('num', number, current_line, column))
        elif ident is not None:
            tokens.append(Token('name', ident, current_line, column))
        else:
            tokens.append(Token('op', '^' if op == '**' else op, current_line, column))
        pos = match.end()
    end_col = len(text) - text.rfind('\n') if '\n' in text else len(text) + 1
    tokens.append(Token('end', '', base_line + text.count('\n'), end_col))
    return tokens


class Parser:
    """
    Grammar:
        expr   := term (('+' | '-') term)*
        term   := unary (('*' | '/') unary)*
        unary  := ('+' | '-') unary | power
        power  := atom ('^' atom)?
        atom   := NUMBER | NAME | NAME '(' expr (',' expr)* ')' | '(' expr ')'
    """

    def __init__(self, text, line=1):
        self.text = text
        self.tokens = tokenize(text, line)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def error(self, message, token=None):
        token = token or self.peek()
        raise ExpressionSyntaxError(message, token.line, token.column, self.text)

    def expect(self, text):
        token = self.peek()
        if token.text != text:
            self.error(f"expected {text!r} but found {token.text or 'end of input'!r}")
        return self.advance()

    def parse(self):
        if self.peek().kind == 'end':
            self.error("empty expression")
        node = self.expr()
        if self.peek().kind != 'end':
            self.error(f"unexpected {self.peek().text!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek().text in ('+', '-') and self.peek().kind == 'op':
            token = self.advance()
            node = Binary(token.text, node, self.term(), token.line, token.column)
        return node

    def term(self):
        node = self.unary()
        while self.peek().text in ('*', '/') and self.peek().kind == 'op':
            token = self.advance()
            node = Binary(token.text, node, self.unary(), token.line, token.column)
        return node

    def unary(self):
        token = self.peek()
        if token.kind == 'op' and token.text in ('+', '-'):
            self.advance()
            return Unary(token.text, self.unary(), token.line, token.column)
        return self.power()

    def power(self):
        node = self.atom()
        token = self.peek()
        if token.kind == 'op' and token.text == '^':
            self.advance()
            exponent = self.atom()
            node = Binary('^', node, exponent, token.line, token.column)
            if self.peek().text == '^':
                self.error("chained exponent needs parentheses")
        return node

    def atom(self):
        token = self.peek()
        if token.kind == 'num':
            self.advance()
            return Num(int(token.text), token.line, token.column)
        if token.kind == 'name':
            self.advance()
            if self.peek().text == '(':
                self.advance()
                args = [self.expr()]
                while self.peek().text == ',':
                    self.advance()
                    args.append(self.expr())
                self.expect(')')
                return Call(token.text, tuple(args), token.line, token.column)
            return Name(token.text, token.line, token.column)
        if token.text == '(':
            self.advance()
            node = self.expr()
            self.expect(')')
            return node
        self.error(f"unexpected {token.text or 'end of input'!r}")


def parse_ast(text, line=1):
    return Parser(text, line).parse()


# Evaluation context
class ParseContext:
    """Identifiers visible to an expression: ring variables, integer bindings, named constants, generators."""

    def __init__(self, ring, constants=None, bindings=None):
        self.ring = ring
        self.field = ring.field
        self.constants = dict(constants or {})
        self.bindings = dict(bindings or {})

    def derive(self, ring=None, constants=None, bindings=None):
        merged_constants = dict(self.constants)
        merged_constants.update(constants or {})
        merged_bindings = dict(self.bindings)
        merged_bindings.update(bindings or {})
        return ParseContext(ring or self.ring, merged_constants, merged_bindings)


def scalar_ring(field):
    return PolyRing(field, ())


def _squarefree_split(n):
    """n = s^2 * f with f squarefree."""
    s, f = 1, 1
    d = 2
    while d * d <= n:
        while n % (d * d) == 0:
            n //= d * d
            s *= d
        if n % d == 0:
            n //= d
            f *= d
        d += 1
    return s, f * n


def _sqrt_scalar(value, context, node):
    value = Fraction(value)
    if value < 0:
        raise ExpressionSyntaxError("sqrt of a negative rational; write I*sqrt(k)", node.line, node.column)
    a, b = value.numerator, value.denominator
    s, f = _squarefree_split(a * b)
    scale = Fraction(s, b)
    if f == 1:
        return context.field.coerce(scale)
    name = f"sqrt({f})"
    if name not in context.field.names:
        raise UndeclaredIdentifierError(f"generator {name} is not declared", node.line, node.column)
    return context.field.gen(name) * scale


def _constant_of(poly, node, what):
    if not isinstance(poly, MultiPolynomial):
        return poly
    if not poly.is_constant():
        raise ExpressionSyntaxError(f"{what} must be constant", node.line, node.column)
    return poly.constant_value()


def _integer_of(value, node, what):
    value = _constant_of(value, node, what)
    if isinstance(value, NumberFieldElement):
        if not value.is_rational():
            raise ExpressionSyntaxError(f"{what} must be an integer", node.line, node.column)
        value = value.rational_value()
    value = Fraction(value)
    if value.denominator != 1:
        raise ExpressionSyntaxError(f"{what} must be an integer", node.line, node.column)
    return int(value)


def evaluate(node, context):
    """Evaluate an AST node to a MultiPolynomial of context.ring."""
    ring = context.ring
    if isinstance(node, Num):
        return ring.const(node.value)
    if isinstance(node, Name):
        name = node.name
        if name in ring._index:
            return ring.var(name)
        if name in context.bindings:
            return ring.const(context.bindings[name])
        if name in context.constants:
            value = context.constants[name]
            if isinstance(value, MultiPolynomial):
                return value.to_ring(ring)
            return ring.const(value)
        if name in context.field.names:
            return ring.const(context.field.gen(name))
        raise UndeclaredIdentifierError(f"undeclared identifier {name!r}", node.line, node.column)
    if isinstance(node, Unary):
        value = evaluate(node.operand, context)
        return -value if node.op == '-' else value
    if isinstance(node, Binary):
        if node.op == '^':
            base = evaluate(node.left, context)
            exponent = _integer_of(evaluate(node.right, context.derive(ring=scalar_ring(context.field))),
                                   node.right, "exponent")
            if exponent < 0:
                raise ExpressionSyntaxError("exponent must be nonnegative", node.line, node.column)
            return base ** exponent
        left = evaluate(node.left, context)
        right = evaluate(node.right, context)
        if node.op == '+':
            return left + right
        if node.op == '-':
            return left - right
        if node.op == '*':
            return left * right
        divisor = _constant_of(right, node, "divisor")
        if not divisor:
            raise ExpressionSyntaxError("division by zero", node.line, node.column)
        return left / divisor
    if isinstance(node, Call):
        return _evaluate_call(node, context)
    raise ExpressionSyntaxError(f"unknown node {node!r}", 1, 1)


def _evaluate_call(node, context):
    ring = context.ring
    name = node.name
    if name == 'sqrt':
        if len(node.args) != 1:
            raise ExpressionSyntaxError("sqrt takes one argument", node.line, node.column)
        inner = evaluate(node.args[0], context.derive(ring=scalar_ring(context.field)))
        value = _constant_of(inner, node, "sqrt argument")
        if isinstance(value, NumberFieldElement):
            if not value.is_rational():
                raise ExpressionSyntaxError("sqrt argument must be rational", node.line, node.column)
            value = value.rational_value()
        return ring.const(_sqrt_scalar(value, context, node))
    if name == 'det_hessian':
        poly = evaluate(node.args[0], context)
        return determinant(hessian_matrix(poly))
    if name == 'bordered_hessian':
        first = evaluate(node.args[0], context)
        second = evaluate(node.args[1], context)
        return determinant(bordered_hessian_matrix(first, second))
    raise UndeclaredIdentifierError(f"unknown function {name!r}", node.line, node.column)


def hessian_matrix(poly):
    coords = poly.ring.coords
    return PolyMatrix([[poly.partial(a).partial(b) for b in coords] for a in coords])


def bordered_hessian_matrix(first, second):
    """Hessian of first bordered by the gradient of second."""
    coords = first.ring.coords
    grad = [second.partial(a) for a in coords]
    rows = [[first.partial(a).partial(b) for b in coords] + [grad[i]] for i, a in enumerate(coords)]
    rows.append(grad + [first.ring.zero()])
    return PolyMatrix(rows)


def parse_expression(text, context, line=1):
    """Parse text into an exact polynomial of context.ring."""
    return evaluate(parse_ast(text, line), context)


def parse_scalar(text, context, line=1):
    """Parse a constant expression into a field scalar."""
    node = parse_ast(text, line)
    value = evaluate(node, context.derive(ring=scalar_ring(context.field)))
    return _constant_of(value, node, "value")


def parse_integer(text, bindings=None, line=1):
    context = ParseContext(scalar_ring(RATIONALS), bindings=bindings)
    node = parse_ast(text, line)
    return _integer_of(evaluate(node, context), node, "value")


# Rendering
def _render_rational(q):
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def render_scalar(value):
    """Render a field scalar; rationals print as a/b."""
    if isinstance(value, NumberFieldElement):
        if not value:
            return "0"
        parts = []
        for mono, q in value.terms():
            parts.append(_join_factor(q, mono))
        return _join_terms(parts)
    return _render_rational(value)


def _join_factor(q, mono):
    if not mono:
        return _render_rational(q)
    if q == 1:
        return mono
    if q == -1:
        return f"-{mono}"
    return f"{_render_rational(q)}*{mono}"


def _join_terms(parts):
    out = parts[0]
    for part in parts[1:]:
        out += part if part.startswith('-') else f"+{part}"
    return out


def render_monomial(ring, key):
    parts = []
    for name, e in zip(ring.names, key):
        if e == 1:
            parts.append(name)
        elif e > 1:
            parts.append(f"{name}^{e}")
    return '*'.join(parts)


def _render_term(coeff, mono):
    if isinstance(coeff, NumberFieldElement):
        if coeff.is_rational():
            return _join_factor(coeff.rational_value(), mono)
        terms = coeff.terms()
        if len(terms) == 1:
            gen_mono, q = terms[0]
            full = '*'.join(x for x in (gen_mono, mono) if x)
            return _join_factor(q, full)
        inner = render_scalar(coeff)
        return f"({inner})*{mono}" if mono else inner
    return _join_factor(coeff, mono)


def term_order(key):
    """Graded lexicographic order: ascending total degree, then earlier variables first."""
    return (sum(key), tuple(-e for e in key))


def render_expression(poly):
    """Deterministic text form; parse(render(p)) == p."""
    if poly.is_zero():
        return "0"
    parts = []
    for key in sorted(poly.terms, key=term_order):
        parts.append(_render_term(poly.terms[key], render_monomial(poly.ring, key)))
    return _join_terms(parts)


# Data files
SECTION_RE = re.compile(r'^\[([A-Za-z_]+)\]\s*$')
LOOP_RE = re.compile(r'^for\s+([A-Za-z_]\w*)\s+in\s+(.+?)\.\.(.+?)\s*:\s*(.+)$')


@dataclass
class FileLine:
    key: str
    value: str
    line: int


class GroupDocument:
    """Raw keyed sections of a group data file, in file order."""

    def __init__(self, path=None):
        self.path = path
        self.sections = {}

    def section(self, name):
        return self.sections.get(name, [])

    def has(self, name):
        return name in self.sections

    def get(self, section, key, default=None):
        for entry in self.section(section):
            if entry.key == key:
                return entry.value
        return default

    def mapping(self, section):
        return {entry.key: entry.value for entry in self.section(section)}


def split_top_level(text, separator=','):
    """Split on separator outside parentheses and brackets."""
    parts, depth, current = [], 0, ''
    for ch in text:
        if ch in '([':
            depth += 1
        elif ch in ')]':
            depth -= 1
        if ch == separator and depth == 0:
            parts.append(current.strip())
            current = ''
        else:
            current += ch
    if current.strip():
        parts.append(current.strip())
    return parts


def parse_group_text(text, path=None):
    """Split a data file into sections of key/value lines (continuations are indented)."""
    document = GroupDocument(path)
    current = None
    for number, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split('#', 1)[0].rstrip()
        if not stripped.strip():
            continue
        match = SECTION_RE.match(stripped.strip())
        if match:
            current = match.group(1)
            document.sections.setdefault(current, [])
            continue
        if current is None:
            raise GroupFileError(f"line {number}: content before the first section", path=path)
        entries = document.sections[current]
        if raw[:1] in (' ', '\t') and entries:
            entries[-1].value += ' ' + stripped.strip()
            continue
        body = stripped.strip()
        if current == 'mirrors' or body.startswith('for '):
            entries.append(FileLine('', body, number))
        elif '=' in body:
            key, value = body.split('=', 1)
            entries.append(FileLine(key.strip(), value.strip(), number))
        else:
            entries.append(FileLine('', body, number))
    return document


def load_group_file(path, params=None):
    """Read and validate a group data file into a GroupSpec."""
    from .groups import GroupSpec
    if not os.path.exists(path):
        raise ConfigurationError(f"group data file not found: {path}")
    with open(path, encoding='utf-8') as handle:
        document = parse_group_text(handle.read(), path)
    return GroupSpec.from_document(document, params or {})


__all__ = [
    'Num', 'Name', 'Call', 'Unary', 'Binary', 'Parser', 'ParseContext', 'parse_ast',
    'parse_expression', 'parse_scalar', 'parse_integer', 'render_expression',
    'render_scalar', 'load_group_file', 'parse_group_text', 'GroupDocument',
    'split_top_level', 'weighted_monomials', 'hessian_matrix', 'bordered_hessian_matrix',
]
