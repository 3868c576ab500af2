"""Exception types raised by drboost."""


class ArgumentError(ValueError):
    """An argument has the wrong shape, type, or range."""


class DomainError(ValueError):
    """A point lies outside the domain of an objective."""


class InfeasibleError(ValueError):
    """A constraint set is empty or an LP turned out infeasible."""


class ConvergenceError(RuntimeError):
    """An iterative routine ran out of budget before reaching its tolerance.

    The best iterate seen and its residual are kept so callers can decide
    whether the result is still usable.
    """

    def __init__(self, message, best=None, residual=None, index=None):
        super().__init__(message)
        self.best = best
        self.residual = residual
        self.index = index


class ConfigError(ValueError):
    """An experiment configuration could not be parsed or validated."""
