"""Exception hierarchy for logsurf.

Input errors map to CLI exit code 2. Computation errors signal that a
model or a derived object broke a property the library relies on.
"""


class LogSurfError(RuntimeError):
    """Base class for every error raised by logsurf."""


class LogSurfInputError(LogSurfError):
    """Malformed or inconsistent input."""


class LogSurfComputationError(LogSurfError):
    """A computation could not be carried out on a well-formed input."""


class DimensionMismatchError(LogSurfInputError):
    pass


class LatticeError(LogSurfInputError):
    pass


class UnknownCurveError(LogSurfInputError):
    def __init__(self, name):
        super().__init__(f"unknown curve '{name}'")
        self.name = name


class ModelParseError(LogSurfInputError):
    def __init__(self, message, line=None, column=None):
        location = ""
        if line is not None:
            location = f"line {line}"
            if column is not None:
                location += f", column {column}"
            location += ": "
        super().__init__(location + message)
        self.line = line
        self.column = column


class ModelValidationError(LogSurfInputError):
    def __init__(self, violations):
        super().__init__("model validation failed: " + "; ".join(violations))
        self.violations = list(violations)


class FibrationDataError(LogSurfInputError):
    pass


class NotLogKodairaOneError(FibrationDataError):
    pass


class ContractionError(LogSurfComputationError):
    pass


class BoundaryNotBigError(LogSurfComputationError):
    pass


class ConsistencyError(LogSurfComputationError):
    pass


class NotAlmostMinimalError(LogSurfComputationError):
    def __init__(self, contractions):
        super().__init__(
            "model is not almost minimal relative to tracked curves; "
            "contractible: " + ", ".join(contractions))
        self.contractions = list(contractions)


class FiberDataMismatchError(LogSurfComputationError):
    pass
