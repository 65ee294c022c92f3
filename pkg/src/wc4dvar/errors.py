"""Exception types raised across the package."""

import numpy as np


class ConfigError(ValueError):
    """Bad dimensions, parameters, or configuration values."""


class BlowupError(FloatingPointError):
    """Model integration produced non-finite values."""

    def __init__(self, step, message=None):
        self.step = step
        super().__init__(message or f"non-finite state produced at step {step}")


class NotSPDError(np.linalg.LinAlgError):
    """A matrix that must be symmetric positive definite is not."""

    def __init__(self, message, min_eigenvalue=None):
        self.min_eigenvalue = min_eigenvalue
        if min_eigenvalue is not None:
            message = f"{message} (smallest eigenvalue {min_eigenvalue:.6e})"
        super().__init__(message)


class NoObservationsError(ValueError):
    """Saddle point formulations need at least one observation."""


class BreakdownError(ArithmeticError):
    """Iterative method hit a non-finite quantity."""

    def __init__(self, iteration, message=None):
        self.iteration = iteration
        super().__init__(message or f"non-finite breakdown at iteration {iteration}")


class ConvergenceError(ArithmeticError):
    """Eigensolver did not reach its tolerance within the sweep cap."""
