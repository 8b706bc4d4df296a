"""
Exception hierarchy for the Orbitbook services.

This module handles:
- The common base class OrbitbookError
- One subclass per failure the computational modules can signal
- Extra context (line/column, section, mirror, indices) carried as attributes
"""


class OrbitbookError(Exception):
    """Base class for every error raised by the Orbitbook services."""


# Configuration and data loading
class ConfigurationError(OrbitbookError):
    """Invalid run configuration or incomplete declarations."""


class UnknownGroupError(ConfigurationError):
    """Group name not present in the registry."""


class GroupFileError(ConfigurationError):
    """Group data file failed validation."""

    def __init__(self, message, section=None, path=None):
        self.section = section
        self.path = path
        prefix = f"[{section}] " if section else ''
        where = f" ({path})" if path else ''
        super().__init__(f"{prefix}{message}{where}")


class ExpressionSyntaxError(OrbitbookError):
    """Lexical or syntax error in an expression."""

    def __init__(self, message, line=1, column=1, text=None):
        self.line = line
        self.column = column
        self.text = text
        super().__init__(f"{message} at line {line}, column {column}")


class UndeclaredIdentifierError(ExpressionSyntaxError):
    """Identifier not declared in the parsing context."""


# Number field
class FieldMismatchError(OrbitbookError):
    """Operands belong to different field towers."""


class FieldDivisionByZero(OrbitbookError, ZeroDivisionError):
    """Inversion of the zero element."""


class ReducibleMinimalPolynomial(ConfigurationError):
    """A declared minimal polynomial factors over its subfield."""


# Polynomials and linear algebra
class VariableMismatchError(OrbitbookError):
    """Polynomials over different variable lists were combined."""


class SingularMatrixError(OrbitbookError):
    """Matrix has zero determinant."""


class DivisibilityError(OrbitbookError):
    """Exact division left a nonzero remainder."""


class NotAnInvariantError(OrbitbookError):
    """Polynomial does not lie in the ring generated by the basis."""


class AlgebraicDependenceError(OrbitbookError):
    """Basis monomials of the requested weight are linearly dependent."""


# Geometry
class ChartMismatchError(OrbitbookError):
    """Tensors from different coordinate charts were combined."""


class FactorizationMismatchError(OrbitbookError):
    """det J does not factor over the declared mirrors."""

    def __init__(self, message, mirror=None):
        self.mirror = mirror
        super().__init__(message)


class IsotropicCovectorError(OrbitbookError):
    """Covector of zero Hermitian norm."""


class MirrorClosureError(OrbitbookError):
    """Seed mirrors do not close up to a finite arrangement."""


class NormalizationError(OrbitbookError):
    """Weighted sum of projections is not a multiple of the identity."""


class NoWeightsError(OrbitbookError):
    """No mirror weights reproduce the target product."""


class InvalidFamilyError(OrbitbookError):
    """Correction weights do not satisfy the vanishing projection sum."""


class DegenerateFormError(OrbitbookError):
    """Bilinear form built from covectors is degenerate."""


class IntegrabilityError(OrbitbookError):
    """Structure constants are not second derivatives of a potential."""

    def __init__(self, message, indices=None):
        self.indices = indices
        super().__init__(message if indices is None else f"{message} at {indices}")


class NotAPencilError(OrbitbookError):
    """Metric is not linear in the top invariant."""


class InvariantViolation(OrbitbookError):
    """Internal assumption of a pipeline step does not hold."""
