"""Exception hierarchy shared by the numerical core, the expression language and the CLI.

Every error carries the process exit code the CLI reports for it:
0 pass, 1 invariant breach or numerical failure, 2 invalid input.
"""
from __future__ import annotations

from typing import Optional

from src.utils.system_logger import EXIT_BREACH, EXIT_INVALID


class HinfCalcError(Exception):
    """Base class for all calculus errors."""

    exit_code: int = EXIT_BREACH


class InvalidInputError(HinfCalcError, ValueError):
    """Malformed matrices, grids, configs or files."""

    exit_code = EXIT_INVALID


class StabilityError(InvalidInputError):
    """Generator is not exponentially stable."""

    def __init__(self, abscissa: float, margin: float):
        super().__init__(f"spectral abscissa {abscissa:.3e} is not below -{margin:.1e}")
        self.abscissa = abscissa


class ExpressionSyntaxError(InvalidInputError):
    def __init__(self, message: str, offset: int, text: str = ""):
        super().__init__(f"{message} at byte offset {offset}")
        self.offset = offset
        self.text = text


class HinfViolationError(InvalidInputError):
    """Expression is not a bounded analytic function on the left half-plane."""

    def __init__(self, message: str, subterm: Optional[str] = None):
        super().__init__(f"{message} (in '{subterm}')" if subterm else message)
        self.subterm = subterm


class NumericalError(HinfCalcError):
    pass


class BranchError(NumericalError):
    pass


class SingularityError(NumericalError):
    pass


class ConditioningError(NumericalError):
    pass


class PoleProximityError(NumericalError):
    def __init__(self, point: complex, pole: complex):
        super().__init__(f"evaluation point {point} lies within proximity of pole {pole}")
        self.point = point
        self.pole = pole


class OracleUnavailableError(HinfCalcError):
    """The requested reference evaluation does not apply to this generator."""


class ConstructionFailedError(HinfCalcError):
    def __init__(self, residual: float, limit: float):
        super().__init__(
            f"extraction residual {residual:.3e} exceeds {limit:.1e}; refine the time grid"
        )
        self.residual = residual


class InvariantBreachError(HinfCalcError):
    pass


__all__ = [
    "BranchError",
    "ConditioningError",
    "ConstructionFailedError",
    "ExpressionSyntaxError",
    "HinfCalcError",
    "HinfViolationError",
    "InvalidInputError",
    "InvariantBreachError",
    "NumericalError",
    "OracleUnavailableError",
    "PoleProximityError",
    "SingularityError",
    "StabilityError",
]
