"""Exception types shared across the package."""


class ColdstartError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(ColdstartError, ValueError):
    """Input violates a documented precondition or invariant."""


class ParseError(ValidationError):
    """A data file could not be parsed.

    Carries the 1-based line number of the offending line.
    """

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class TrainingDiverged(ColdstartError):
    """Factor-model training produced non-finite values."""

    def __init__(self, pass_index: int):
        super().__init__(f"non-finite factors after pass {pass_index}")
        self.pass_index = pass_index


class SingularSystem(ColdstartError):
    """Fold-in normal equations are singular (regularization 0, deficient rank)."""


class UpdateRejected(ColdstartError):
    """An optimizer update was rejected because of a non-finite gradient."""

    def __init__(self, layer: str):
        super().__init__(f"non-finite gradient in layer {layer!r}")
        self.layer = layer


class SkipUser(ColdstartError):
    """Cold user has too little hidden feedback to run an episode."""
