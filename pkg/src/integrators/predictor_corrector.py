"""
Predictor-corrector baseline on the unreduced stage system.

The system is split into an electrical part
    K_E1 ẋ_E + K_E2(θ) x_E = g_E(t),  x_E = (Ψ̇; Ψ)
and a mechanical part
    K_M1 ẋ_M + K_M2 x_M = g_M(Ψ, θ),   x_M = (θ̇; θ)
and each is advanced by a β-weighted linear update, the electrical one using
the predicted angle θ⁽⁰⁾ = θ_n + h θ̇_n.
"""
import logging
from typing import Tuple

import numpy as np
from scipy import linalg

from ..core.errors import StepFailure
from ..core.model import ANGLE_INDEX, N_MASSES, StageSystem
from ..core.state import SystemState
from .base import BaseIntegrator

logger = logging.getLogger(__name__)


def electrical_matrices(system: StageSystem, theta5: float) -> Tuple[np.ndarray, np.ndarray]:
    """K_E1 = diag(0, I) and K_E2(θ) = [[K_R, N(θ)], [−I, 0]]."""
    m = system.dim
    K1 = np.zeros((2 * m, 2 * m))
    K1[m:, m:] = np.eye(m)
    K2 = np.zeros((2 * m, 2 * m))
    K2[:m, :m] = np.diag(system.kr)
    K2[:m, m:] = system.n_matrix(theta5)
    K2[m:, :m] = -np.eye(m)
    return K1, K2


def mechanical_matrices(system: StageSystem) -> Tuple[np.ndarray, np.ndarray]:
    """K_M1 = diag(J, I₆) and K_M2 = [[D, K], [−I₆, 0]]."""
    K1 = np.zeros((2 * N_MASSES, 2 * N_MASSES))
    K1[:N_MASSES, :N_MASSES] = system.inertia
    K1[N_MASSES:, N_MASSES:] = np.eye(N_MASSES)
    K2 = np.zeros((2 * N_MASSES, 2 * N_MASSES))
    K2[:N_MASSES, :N_MASSES] = system.damping
    K2[:N_MASSES, N_MASSES:] = system.stiffness
    K2[N_MASSES:, :N_MASSES] = -np.eye(N_MASSES)
    return K1, K2


def electrical_source(system: StageSystem, t: float) -> np.ndarray:
    """g_E(t) = (f(t); 0)."""
    return np.concatenate([system.source(t), np.zeros(system.dim)])


def mechanical_source(system: StageSystem, psi: np.ndarray, theta5: float) -> np.ndarray:
    """g_M = (T − ½Ψᵀ N'(θ₅) Ψ e₅; 0)."""
    torque = system.torque.copy()
    torque[ANGLE_INDEX] -= 0.5 * psi @ system.n_matrix_d(theta5) @ psi
    return np.concatenate([torque, np.zeros(N_MASSES)])


def _solve(matrix: np.ndarray, rhs: np.ndarray, what: str, t: float, h: float, beta: float) -> np.ndarray:
    try:
        return linalg.solve(matrix, rhs)
    except (linalg.LinAlgError, ValueError) as e:
        raise StepFailure(
            f"Singular {what} update matrix (beta={beta}, h={h:g}): {e}",
            t=t,
            h=h,
            method=f"pc-beta{beta:g}",
        ) from e


def pc_step(
    full_sys: StageSystem,
    x_E: np.ndarray,
    x_M: np.ndarray,
    t: float,
    h: float,
    beta: float
) -> Tuple[np.ndarray, np.ndarray]:
    """
    One predictor-corrector step.

    Args:
        full_sys: Stage system with shorted rows removed but not reduced
        x_E: Electrical state (Ψ̇; Ψ)
        x_M: Mechanical state (θ̇; θ)
        t: Time at the start of the step
        h: Step size (h = 0 returns the inputs)
        beta: Implicitness weight in [0, 1]

    Returns:
        Tuple[np.ndarray, np.ndarray]: (x_E, x_M) at t + h

    Raises:
        StepFailure: If an update matrix is singular
    """
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must lie in [0, 1], got {beta}")
    if h == 0.0:
        return x_E.copy(), x_M.copy()
    m = full_sys.dim
    theta_dot, theta = x_M[:N_MASSES], x_M[N_MASSES:]
    theta_pred = theta + h * theta_dot

    E1, E2_now = electrical_matrices(full_sys, theta[ANGLE_INDEX])
    _, E2_pred = electrical_matrices(full_sys, theta_pred[ANGLE_INDEX])
    rhs_E = (E1 - (1.0 - beta) * h * E2_now) @ x_E + h * (
        beta * electrical_source(full_sys, t + h) + (1.0 - beta) * electrical_source(full_sys, t)
    )
    x_E_next = _solve(E1 + beta * h * E2_pred, rhs_E, "electrical", t, h, beta)

    # θ shifted by θ₅ so Kθ is formed without cancellation; K·1 = 0
    shift = theta[ANGLE_INDEX]
    x_M_shifted = np.concatenate([theta_dot, theta - shift])
    M1, M2 = mechanical_matrices(full_sys)
    g_now = mechanical_source(full_sys, x_E[m:], theta[ANGLE_INDEX])
    g_next = mechanical_source(full_sys, x_E_next[m:], theta_pred[ANGLE_INDEX])
    rhs_M = (M1 - (1.0 - beta) * h * M2) @ x_M_shifted + h * (beta * g_next + (1.0 - beta) * g_now)
    x_M_next = _solve(M1 + beta * h * M2, rhs_M, "mechanical", t, h, beta)
    x_M_next[N_MASSES:] += shift
    return x_E_next, x_M_next


class PredictorCorrectorIntegrator(BaseIntegrator):
    """Fixed-step predictor-corrector integrator on full stage coordinates."""
    reduced = False

    def __init__(self, system: StageSystem, h: float, beta: float, name: str = ""):
        super().__init__(h=h, name=name or f"pc-beta{beta:g}")
        if not 0.0 <= beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {beta}")
        self.system = system
        self.beta = beta

    @property
    def electrical_dim(self) -> int:
        return self.system.dim

    def step(self, state: SystemState) -> SystemState:
        x_E, x_M = pc_step(self.system, state.electrical(), state.mechanical(), state.t, self.h, self.beta)
        m = self.system.dim
        return SystemState(
            psi_dot=x_E[:m],
            psi=x_E[m:],
            theta_dot=x_M[:N_MASSES],
            theta=x_M[N_MASSES:],
            t=state.t + self.h,
            stage=state.stage,
            reduced=False,
        )

    def energy(self, state: SystemState) -> float:
        theta = state.theta - state.theta[ANGLE_INDEX]
        return 0.5 * float(
            state.psi @ self.system.n_matrix(state.theta[ANGLE_INDEX]) @ state.psi
            + state.theta_dot @ self.system.inertia @ state.theta_dot
            + theta @ self.system.stiffness @ theta
        )
