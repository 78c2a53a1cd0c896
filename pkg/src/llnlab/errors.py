"""Exception types shared across the package."""


class LLNLabError(Exception):
    """Base class for every error this package raises on purpose."""


class InvalidParamsError(LLNLabError, ValueError):
    """A descriptor, normalizer, or argument failed validation."""


class UnknownKindError(InvalidParamsError):
    """A descriptor kind or transform tag is not recognised."""


class HorizonOverflowError(InvalidParamsError):
    """Requested horizon exceeds the configured maximum."""


class MomentsUnavailableError(LLNLabError, RuntimeError):
    """An operation needs an analytic moment profile the family lacks."""


class InsufficientReplicationsError(InvalidParamsError):
    """Fewer replications or samples than the estimator requires."""


class NegativeVarianceError(InvalidParamsError):
    """A variance function returned a negative value."""


class NegativityDetectedError(LLNLabError, ValueError):
    """A family declared non-negative produced negative samples."""


class NonMonotoneTailError(InvalidParamsError):
    """A tail function increased beyond tolerance."""


class ToleranceNotMetError(LLNLabError, RuntimeError):
    """Quadrature could not reach the requested tolerance.

    Carries the partial result so callers can still inspect the value.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class NonFiniteIntegrandError(LLNLabError, ValueError):
    """The integrand returned NaN or +/-inf inside the integration range."""


class SupExceededError(InvalidParamsError):
    """A scaled mean exceeded the band structure implied by the supplied bound."""


class NonFiniteMeanError(InvalidParamsError):
    """A mean path returned NaN or +/-inf."""


class HorizonMismatchError(InvalidParamsError):
    """A trajectory is shorter than the index it is checked against."""


class EmptyConditionError(LLNLabError, RuntimeError):
    """No sample satisfied the conditioning event."""


class ConfigError(LLNLabError, ValueError):
    """An experiment config file failed validation."""
