"""
Electromechanical state container shared by the integrators and scenarios.
"""
from dataclasses import dataclass, replace

import numpy as np

from .model import N_MASSES


@dataclass(frozen=True)
class SystemState:
    """
    State (Ψ̇, Ψ, θ̇, θ, t) of one stage.

    Fluxes are either full stage coordinates (Λ₀ removed) or reduced Λ₂
    coordinates; ``reduced`` records which.
    """
    psi_dot: np.ndarray
    psi: np.ndarray
    theta_dot: np.ndarray
    theta: np.ndarray
    t: float
    stage: str = ""
    reduced: bool = False

    @property
    def electrical_dim(self) -> int:
        return len(self.psi)

    def to_vector(self) -> np.ndarray:
        """Stacked port-Hamiltonian state x = (Ψ̇; Ψ; θ̇; θ; t)."""
        return np.concatenate([self.psi_dot, self.psi, self.theta_dot, self.theta, [self.t]])

    @classmethod
    def from_vector(cls, x: np.ndarray, m: int, stage: str = "", reduced: bool = False) -> "SystemState":
        x = np.asarray(x, dtype=float)
        if len(x) != 2 * m + 2 * N_MASSES + 1:
            raise ValueError(f"State vector of length {len(x)} does not match electrical dimension {m}")
        return cls(
            psi_dot=x[:m].copy(),
            psi=x[m:2 * m].copy(),
            theta_dot=x[2 * m:2 * m + N_MASSES].copy(),
            theta=x[2 * m + N_MASSES:2 * m + 2 * N_MASSES].copy(),
            t=float(x[-1]),
            stage=stage,
            reduced=reduced,
        )

    def electrical(self) -> np.ndarray:
        """x_E = (Ψ̇; Ψ)."""
        return np.concatenate([self.psi_dot, self.psi])

    def mechanical(self) -> np.ndarray:
        """x_M = (θ̇; θ)."""
        return np.concatenate([self.theta_dot, self.theta])

    def with_time(self, t: float) -> "SystemState":
        return replace(self, t=t)
