"""Exception hierarchy shared by every module of the package."""


class DPPError(Exception):
    """Base class for all errors raised by dppproj."""


class InvalidParameter(DPPError, ValueError):
    pass


class ExistenceViolation(DPPError, ValueError):
    """Kernel parameters outside the region where the DPP exists."""


class DimensionMismatch(DPPError, ValueError):
    pass


class IndexOutOfRange(DPPError, IndexError):
    pass


class EmptySpectrum(DPPError, ValueError):
    pass


class DuplicatePoints(DPPError, ValueError):
    pass


class InvalidRadius(DPPError, ValueError):
    pass


class EmptyInput(DPPError, ValueError):
    pass


class NotProjectionKernel(DPPError, ValueError):
    pass


class NonNegativityViolation(DPPError, ValueError):
    pass


class SeriesDivergence(DPPError, ArithmeticError):
    pass


class BudgetExceeded(DPPError, RuntimeError):
    pass


class RejectionBudgetExceeded(BudgetExceeded):
    def __init__(self, message, acceptance_rate=None):
        super().__init__(message)
        self.acceptance_rate = acceptance_rate


class ConfigError(DPPError, ValueError):
    """Malformed or unknown configuration content (CLI exit code 2)."""
