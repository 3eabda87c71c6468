"""Exception hierarchy shared by the core modules.

Each error also derives from the closest builtin so callers that only know
about ValueError / KeyError / ArithmeticError keep working.
"""
from typing import Iterable, Optional


class IntegrabilityError(Exception):
    """Base class for every error raised by this package."""


class ExpressionSyntaxError(IntegrabilityError, ValueError):
    """Expression text could not be parsed."""


class UnassignedVariableError(IntegrabilityError, KeyError):
    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def __str__(self):
        return f"variable {self.name!r} has no assigned value"


class DomainError(IntegrabilityError, ArithmeticError):
    """Evaluation left the domain of an elementary function.

    `subexpression` is the node that failed (log of a non-positive number,
    division by zero, fractional power of a negative number, overflow).
    """

    def __init__(self, message: str, subexpression=None):
        super().__init__(message)
        self.subexpression = subexpression

    def __str__(self):
        base = super().__str__()
        if self.subexpression is None:
            return base
        return f"{base} in {self.subexpression!r}"


class DegenerateMetricError(IntegrabilityError, ValueError):
    """det g vanishes (structurally or at an evaluation point)."""


class NormalizationError(IntegrabilityError, ValueError):
    """Semi-geodesic coefficients violate a_{n-1} = g, a_n = 1."""


class DimensionError(IntegrabilityError, ValueError):
    """System size outside the supported range."""


class CoincidingVelocitiesError(IntegrabilityError, ArithmeticError):
    def __init__(self, j: int, k: int, value: float):
        super().__init__(f"velocities v{j + 1} and v{k + 1} coincide ({value!r})")
        self.pair = (j, k)


class ConvergenceError(IntegrabilityError, ArithmeticError):
    """Newton iteration did not reach the requested residual."""

    def __init__(self, message: str, iterate=None, residual: Optional[float] = None):
        super().__init__(message)
        self.iterate = iterate
        self.residual = residual


class SingularJacobianError(ConvergenceError):
    pass


class NewtonDomainError(ConvergenceError):
    pass


class GridError(IntegrabilityError, ValueError):
    """A grid operation needs nodes that are not converged."""


class BranchJumpError(IntegrabilityError, ArithmeticError):
    pass


class UnknownExampleError(IntegrabilityError, KeyError):
    def __init__(self, example_id: str, available: Iterable[str]):
        self.example_id = example_id
        self.available = list(available)
        super().__init__(example_id)

    def __str__(self):
        return f"unknown example {self.example_id!r}; available: {', '.join(self.available)}"


class ConfigError(IntegrabilityError, ValueError):
    """Invalid run configuration or config file."""


__all__ = [
    "IntegrabilityError",
    "ExpressionSyntaxError",
    "UnassignedVariableError",
    "DomainError",
    "DegenerateMetricError",
    "NormalizationError",
    "DimensionError",
    "CoincidingVelocitiesError",
    "ConvergenceError",
    "SingularJacobianError",
    "NewtonDomainError",
    "GridError",
    "BranchJumpError",
    "UnknownExampleError",
    "ConfigError",
]
