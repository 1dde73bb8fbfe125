"""Exception hierarchy. CLI exit codes are keyed off these classes."""


class AAGCNError(Exception):
    """Base class for all package errors."""


class ShapeError(AAGCNError, ValueError):
    pass


class ValidationError(AAGCNError, ValueError):
    pass


class UndefinedScoreError(ValidationError):
    """A score or ratio has no defined value for the given input."""


class ResourceError(AAGCNError):
    pass


class NumericalError(AAGCNError, ArithmeticError):
    pass


class DivergenceError(NumericalError):
    def __init__(self, message: str, epoch: int | None = None):
        super().__init__(message)
        self.epoch = epoch
