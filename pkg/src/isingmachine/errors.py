"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Inconsistent combination of lattice, schedule, bank or run settings."""


class CapacityError(ValueError):
    """A requested size exceeds what the emulated machine can hold."""


class ModelMismatchError(ValueError):
    """An operation was called with parameters for a different Hamiltonian."""


class InsufficientDataError(ValueError):
    """Not enough samples or bits for a statistic to be defined."""


class FitError(RuntimeError):
    """Nonlinear fit did not converge.

    The last sum of squared residuals is kept on ``residual``.
    """

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual
