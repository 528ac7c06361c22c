"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class LcakError(Exception):
    """Base class for all errors raised by :mod:`lcak`."""


class ExprSyntaxError(LcakError):
    """Malformed expression source.

    Attributes:
        position: 0-based character offset of the offending token.
        expected: Tokens that would have been accepted at ``position``.
    """

    def __init__(self, message: str, position: int, expected: tuple[str, ...] = ()):
        self.position = position
        self.expected = tuple(expected)
        detail = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{message} at position {position}{detail}")


class UnknownIdentifier(LcakError):
    def __init__(self, name: str, position: int):
        self.name = name
        self.position = position
        super().__init__(f"unknown identifier {name!r} at position {position}")


class DomainError(LcakError, ArithmeticError):
    """Evaluation left the real domain (log of non-positive, zero division, NaN/Inf)."""


class DefinitionError(LcakError):
    """Malformed manifold definition file.

    Attributes:
        line: 1-based line number, or ``None`` when the error is not tied to a line.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class StencilOutOfDomain(LcakError):
    pass


class NotPositiveDefinite(LcakError):
    pass


class SingularMetric(LcakError):
    pass


class DegenerateForm(LcakError):
    pass


class NotLCaK(LcakError):
    """dΩ is not of the form ω∧Ω at the point.

    Attributes:
        residual: relative least-squares residual of the Lee-form solve.
    """

    def __init__(self, residual: float):
        self.residual = residual
        super().__init__(f"dΩ is not in the image of ω ↦ ω∧Ω (relative residual {residual:.3e})")


class MissingConformalExponent(LcakError):
    pass


class DegenerateLeeField(LcakError):
    def __init__(self, norm_b2: float):
        self.norm_b2 = norm_b2
        super().__init__(f"Lee field too small for a foliation: ||B||^2 = {norm_b2:.3e}")


class NotInL1(LcakError):
    def __init__(self, residual: float):
        self.residual = residual
        super().__init__(f"point fails the L1 curvature identity (residual {residual:.3e})")
