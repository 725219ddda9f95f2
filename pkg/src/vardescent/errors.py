"""Exception hierarchy shared by every layer of the engine."""

from __future__ import annotations


class VardescentError(Exception):
    """Base class for all engine errors."""

    exit_code = 2


class ParseError(VardescentError):
    def __init__(self, message: str, position: int | None = None, text: str | None = None):
        self.position = position
        self.text = text
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class UndeclaredIdentifier(ParseError):
    pass


class JetOrderError(VardescentError):
    """Raised whenever an operation would produce a jet coordinate above the cap."""

    def __init__(self, required: int, cap: int, what: str = ""):
        self.required = required
        self.cap = cap
        suffix = f" in {what}" if what else ""
        super().__init__(f"jet order {required} exceeds cap K={cap}{suffix}")


class UnassignedSymbol(VardescentError):
    pass


class MixedChartError(VardescentError):
    pass


class DegreeError(VardescentError):
    """Bidegree or form-degree mismatch."""


class NoPrimitiveInAnsatz(VardescentError):
    exit_code = 3

    def __init__(self, message: str, residual=None, bounds=None, step=None, simplex=None):
        self.residual = residual
        self.bounds = bounds
        self.step = step
        self.simplex = simplex
        super().__init__(message)


class NotClosed(VardescentError):
    exit_code = 3

    def __init__(self, message: str, residual=None):
        self.residual = residual
        super().__init__(message)


class MissingTransition(VardescentError):
    pass


class IntegralityFailure(VardescentError):
    exit_code = 1

    def __init__(self, message: str, defects=None):
        self.defects = defects or {}
        super().__init__(message)


class SourceGluingFailure(VardescentError):
    exit_code = 1

    def __init__(self, message: str, residual=None, report=None):
        self.residual = residual
        self.report = report
        super().__init__(message)


class NoConsistentSign(VardescentError):
    exit_code = 1

    def __init__(self, message: str, report=None):
        self.report = report
        super().__init__(message)


class NotASolution(VardescentError):
    exit_code = 1

    def __init__(self, message: str, residual: float = 0.0, location=None, report=None):
        self.residual = residual
        self.location = location
        self.report = report
        super().__init__(message)


class QuadratureError(VardescentError):
    exit_code = 1


class InconsistentField(VardescentError):
    pass


class SchemaError(VardescentError):
    def __init__(self, message: str, path: str = ""):
        self.path = path
        if path:
            message = f"{path}: {message}"
        super().__init__(message)


class DanglingReference(SchemaError):
    pass
