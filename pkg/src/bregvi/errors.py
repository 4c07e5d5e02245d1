"""Exception types raised by bregvi."""


class BregviError(Exception):
    """Base class for all package errors."""


class DimensionError(BregviError, ValueError):
    """A parameter vector does not match the model dimension."""


class DomainError(BregviError, ValueError):
    """A parameter lies outside the model domain."""


class ModelError(BregviError, ValueError):
    """Invalid model construction or failed model evaluation."""


class PreconditionError(BregviError, ValueError):
    """An operation was called outside its stated preconditions."""


class DivergenceError(BregviError, ArithmeticError):
    """An iteration produced non-finite values."""


class OracleError(BregviError, ArithmeticError):
    """A numerical oracle hit a non-finite evaluation."""


class SpecError(BregviError, ValueError):
    """An experiment configuration failed validation."""
