"""Exception types shared across the package."""


class ModelError(Exception):
    """Base class for every error raised by this package."""


class DomainError(ModelError):
    """An argument lies outside the domain an operation is defined on."""


class StateConsistencyError(ModelError):
    """A population state violates its invariants.

    Raised for negative compartments beyond round-off tolerance and for
    susceptible pools that have gone negative (a sign of integration
    blow-up or inconsistent inputs).
    """


class DegenerateControlError(DomainError):
    """A closed-form expression is undefined at the requested control level."""


class ConfigError(ModelError):
    """A scenario configuration is malformed, incomplete or inconsistent."""


class IntegrationError(ModelError):
    """Time stepping produced a non-finite or impossible state."""

    def __init__(self, message: str, step: int | None = None):
        if step is not None:
            message = f"{message} (step {step})"
        super().__init__(message)
        self.step = step


class SolverError(ModelError):
    """The control solver produced non-finite values during its sweeps."""
