"""Exception hierarchy shared by the library, the services and the CLI."""


class StratABCError(Exception):
    """Base class for all package errors."""


class DimensionError(StratABCError, ValueError):
    """Array arguments have incompatible shapes."""


class ParameterError(StratABCError, ValueError):
    """A numeric argument is outside its valid range."""


class ConfigError(StratABCError):
    """An experiment configuration is invalid.

    Carries every validation message, not only the first one.
    """

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors) if self.errors else "invalid configuration")


class StartupError(StratABCError):
    """A sampler could not find a valid initial state within the retry bound."""


class DegeneracyError(StratABCError):
    """Weights, series or populations are degenerate (all zero, constant, ...)."""


class InvariantViolation(StratABCError):
    """An internal invariant was broken (for example a retained state with zero likelihood)."""
