"""Exception hierarchy shared by every module of the workbench."""


class CRTError(Exception):
    """Base class for all errors raised by crt."""


class SpaceMismatch(CRTError):
    pass


class DimensionMismatch(CRTError):
    pass


class UnknownVariable(CRTError):
    pass


class NonzeroConstantTerm(CRTError):
    pass


class NotAUnit(CRTError):
    pass


class SingularJacobian(CRTError):
    pass


class NotSquare(CRTError):
    pass


class RealityViolation(CRTError):
    pass


class DegenerateCodirection(CRTError):
    pass


class NotASelfMap(CRTError):
    """Raised when an operation needs H(M) in M' but the map fails that test."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class NormalizationFailure(CRTError):
    pass


class ValidationFailure(CRTError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ManifestError(CRTError):
    """Manifest-level diagnostic carrying an optional source position."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        self.message = message
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)


class ManifestSyntaxError(ManifestError):
    def __init__(self, message, line=None, column=None, expected=()):
        self.expected = tuple(expected)
        if self.expected:
            message = f"{message} (expected {', '.join(self.expected)})"
        super().__init__(message, line, column)


class ManifestDimensionMismatch(ManifestError, DimensionMismatch):
    pass


class ManifestConstantTerm(ManifestError, NonzeroConstantTerm):
    pass


class UnknownIdentifier(ManifestError):
    pass


class UnresolvedImplicit(ManifestError):
    pass
