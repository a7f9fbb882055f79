"""
Port-Hamiltonian descriptor form of a stage system.

    M ẋ = (P − Q) z(x) + (F − V) u(x),    y = (F + V)ᵀ z + (S − W) u

with x = (Ψ̇; Ψ; θ̇; θ; t), M = diag(0, I, J, I, 1), V = S = W = 0.
The electrical provider is either a ReducedSystem (reduced coordinates) or
an unreduced StageSystem, whose Λ₁ rows then act as algebraic constraints.
"""
import logging
from functools import cached_property
from typing import Protocol

import numpy as np

from ..core.model import ANGLE_INDEX, N_MASSES

logger = logging.getLogger(__name__)


class ElectromechanicalProvider(Protocol):
    """Interface shared by StageSystem and ReducedSystem."""
    name: str
    dim: int
    kr: np.ndarray
    stiffness: np.ndarray
    inertia: np.ndarray
    damping: np.ndarray
    torque: np.ndarray

    def n_matrix(self, theta: float) -> np.ndarray: ...

    def n_matrix_d(self, theta: float) -> np.ndarray: ...

    def n_matrix_d2(self, theta: float) -> np.ndarray: ...

    def source(self, t: float) -> np.ndarray: ...

    def source_rate(self, t: float) -> np.ndarray: ...


def _skew_pair(k: int) -> np.ndarray:
    """[[0, −I_k], [I_k, 0]]."""
    block = np.zeros((2 * k, 2 * k))
    block[:k, k:] = -np.eye(k)
    block[k:, :k] = np.eye(k)
    return block


class PHSystem:
    """
    Port-Hamiltonian descriptor system built around an electrical provider.

    Args:
        provider: Stage or reduced system exposing N(θ), K_R, f(t) and the
            mechanical matrices
    """
    def __init__(self, provider: ElectromechanicalProvider):
        self.provider = provider
        self.m = provider.dim
        m = self.m
        self.size = 2 * m + 2 * N_MASSES + 1

        self.sl_psi_dot = slice(0, m)
        self.sl_psi = slice(m, 2 * m)
        self.sl_theta_dot = slice(2 * m, 2 * m + N_MASSES)
        self.sl_theta = slice(2 * m + N_MASSES, 2 * m + 2 * N_MASSES)
        self.i_time = self.size - 1
        self.i_theta5 = 2 * m + N_MASSES + ANGLE_INDEX
        self.i_torque_row = self.i_theta5

        self.M = np.zeros((self.size, self.size))
        self.M[self.sl_psi, self.sl_psi] = np.eye(m)
        self.M[self.sl_theta_dot, self.sl_theta_dot] = provider.inertia
        self.M[self.sl_theta, self.sl_theta] = np.eye(N_MASSES)
        self.M[self.i_time, self.i_time] = 1.0

        self.P = np.zeros((self.size, self.size))
        self.P[:2 * m, :2 * m] = _skew_pair(m)
        self.P[2 * m:2 * m + 2 * N_MASSES, 2 * m:2 * m + 2 * N_MASSES] = _skew_pair(N_MASSES)

        self.Q = np.zeros((self.size, self.size))
        self.Q[self.sl_psi_dot, self.sl_psi_dot] = np.diag(provider.kr)
        self.Q[self.sl_theta_dot, self.sl_theta_dot] = provider.damping

        self.F = np.zeros((self.size, self.size))
        self.F[self.sl_psi_dot, self.sl_psi_dot] = np.eye(m)
        self.F[self.sl_theta_dot, self.sl_theta_dot] = np.eye(N_MASSES)
        self.F[self.i_time, self.i_time] = 1.0

        self.V = np.zeros((self.size, self.size))
        self.S = np.zeros((self.size, self.size))
        self.W = np.zeros((self.size, self.size))

        self.PQ = self.P - self.Q

    @property
    def name(self) -> str:
        return self.provider.name

    @cached_property
    def A_big(self) -> np.ndarray:
        """[[P, F], [−Fᵀ, W]]."""
        return np.block([[self.P, self.F], [-self.F.T, self.W]])

    @cached_property
    def B_big(self) -> np.ndarray:
        """[[Q, V], [Vᵀ, S]]."""
        return np.block([[self.Q, self.V], [self.V.T, self.S]])

    def structure_defects(self) -> dict:
        """Skewness and definiteness defects of the interconnection and dissipation matrices."""
        return {
            "A_skew": float(np.abs(self.A_big + self.A_big.T).max()),
            "Q_asym": float(np.abs(self.Q - self.Q.T).max()),
            "B_min_eig": float(np.linalg.eigvalsh(0.5 * (self.B_big + self.B_big.T))[0]),
        }

    def _shifted_theta(self, x: np.ndarray) -> np.ndarray:
        # K·1 = 0, so Kθ = K(θ − θ₅·1) without cancellation at large θ
        theta = x[self.sl_theta]
        return theta - theta[ANGLE_INDEX]

    def z(self, x: np.ndarray) -> np.ndarray:
        """Effort z(x) = (Ψ̇; NΨ; θ̇; Kθ + ½Ψᵀ N' Ψ e₅; 0)."""
        psi = x[self.sl_psi]
        theta5 = x[self.i_theta5]
        out = np.zeros(self.size)
        out[self.sl_psi_dot] = x[self.sl_psi_dot]
        out[self.sl_psi] = self.provider.n_matrix(theta5) @ psi
        out[self.sl_theta_dot] = x[self.sl_theta_dot]
        out[self.sl_theta] = self.provider.stiffness @ self._shifted_theta(x)
        out[self.i_torque_row] += 0.5 * psi @ self.provider.n_matrix_d(theta5) @ psi
        return out

    def u(self, x: np.ndarray) -> np.ndarray:
        """Port input u(x) = (f(t); 0; T; 0; 1)."""
        out = np.zeros(self.size)
        out[self.sl_psi_dot] = self.provider.source(x[self.i_time])
        out[self.sl_theta_dot] = self.provider.torque
        out[self.i_time] = 1.0
        return out

    def y(self, x: np.ndarray) -> np.ndarray:
        """Port output y = (F + V)ᵀz + (S − W)u."""
        return (self.F + self.V).T @ self.z(x) + (self.S - self.W) @ self.u(x)

    def dz(self, x: np.ndarray) -> np.ndarray:
        """Analytic Jacobian ∂z/∂x."""
        psi = x[self.sl_psi]
        theta5 = x[self.i_theta5]
        n_d_psi = self.provider.n_matrix_d(theta5) @ psi
        jac = np.zeros((self.size, self.size))
        jac[self.sl_psi_dot, self.sl_psi_dot] = np.eye(self.m)
        jac[self.sl_psi, self.sl_psi] = self.provider.n_matrix(theta5)
        jac[self.sl_psi, self.i_theta5] = n_d_psi
        jac[self.sl_theta_dot, self.sl_theta_dot] = np.eye(N_MASSES)
        jac[self.sl_theta, self.sl_theta] = self.provider.stiffness
        jac[self.i_torque_row, self.sl_psi] += n_d_psi
        jac[self.i_torque_row, self.i_theta5] += 0.5 * psi @ self.provider.n_matrix_d2(theta5) @ psi
        return jac

    def du(self, x: np.ndarray) -> np.ndarray:
        """Analytic Jacobian ∂u/∂x; only the forcing depends on t."""
        jac = np.zeros((self.size, self.size))
        jac[self.sl_psi_dot, self.i_time] = self.provider.source_rate(x[self.i_time])
        return jac

    def rhs(self, x: np.ndarray) -> np.ndarray:
        """(P − Q)z(x) + (F − V)u(x)."""
        return self.PQ @ self.z(x) + (self.F - self.V) @ self.u(x)

    def hamiltonian(self, x: np.ndarray) -> float:
        """Stored energy ½ΨᵀNΨ + ½θ̇ᵀJθ̇ + ½θᵀKθ."""
        psi = x[self.sl_psi]
        theta_dot = x[self.sl_theta_dot]
        theta = self._shifted_theta(x)
        return 0.5 * float(
            psi @ self.provider.n_matrix(x[self.i_theta5]) @ psi
            + theta_dot @ self.provider.inertia @ theta_dot
            + theta @ self.provider.stiffness @ theta
        )

    def initial_stage_guess(self, x: np.ndarray) -> np.ndarray:
        """Stage derivative guess with dΨ/dt = Ψ̇, dθ/dt = θ̇ and dt/dt = 1."""
        k = np.zeros(self.size)
        k[self.sl_psi] = x[self.sl_psi_dot]
        k[self.sl_theta] = x[self.sl_theta_dot]
        k[self.i_time] = 1.0
        return k
