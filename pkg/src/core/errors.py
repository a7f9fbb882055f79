"""
Exception hierarchy shared by the simulator packages.
"""
from typing import Optional


class FTSimError(Exception):
    """Base class for all simulator errors."""


class ConfigError(FTSimError, ValueError):
    """Raised when a run document or preset cannot be parsed."""


class ModelError(FTSimError, ValueError):
    """Raised when generator or network parameters are invalid."""


class ReductionError(FTSimError, RuntimeError):
    """Raised when the Schur-complement reduction or its trig fit fails."""


class EquilibriumError(FTSimError, RuntimeError):
    """
    Raised when the equilibrium Newton iteration diverges.

    Args:
        message: Human readable description
        residual: Scaled residual norm of the last iterate
    """
    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


class StepFailure(FTSimError, RuntimeError):
    """
    Raised when a single integration step cannot be completed.

    Args:
        message: Human readable description
        t: Time at the start of the failed step
        h: Step size
        residual: Last Newton residual (scaled), if any
        method: Integration method name
    """
    def __init__(
        self,
        message: str,
        t: float = float("nan"),
        h: float = float("nan"),
        residual: Optional[float] = None,
        method: str = ""
    ):
        super().__init__(message)
        self.t = t
        self.h = h
        self.residual = residual
        self.method = method

    def __str__(self) -> str:
        base = super().__str__()
        return f"{base} (method={self.method}, t={self.t:.6g}, h={self.h:.3g}, residual={self.residual})"


class SwitchingError(FTSimError, ValueError):
    """Raised when a stage switch cannot map a component between stages."""


class BracketError(FTSimError, RuntimeError):
    """Raised when a CCT bracket is invalid or a probe stays inconclusive."""
