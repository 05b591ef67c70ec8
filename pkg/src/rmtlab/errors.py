"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A spec, target or experiment configuration is invalid; the message names the offending field."""


class NumericalError(RuntimeError):
    """An eigensolver or pencil solve failed; carries the seed for triage."""

    def __init__(self, message, seed=None):
        super().__init__(message)
        self.seed = seed


class InsufficientDataError(ValueError):
    """Too few samples to form the requested statistic."""


class ConditioningTimeout(RuntimeError):
    """The rare-event chain exhausted its step budget.

    Carries the best matrix reached and its objective value so callers can
    log or retry.
    """

    def __init__(self, message, best_matrix=None, best_value=None, steps=0):
        super().__init__(message)
        self.best_matrix = best_matrix
        self.best_value = best_value
        self.steps = steps
