"""
Equilibrium operating points in the synchronous xy frame.

With Ψ = R(ω_s t)φ on every node pair and θ = δ + ω_s t·1 the stage
equations become autonomous:

    (K_L + ω_s K_j K_R + Γ(δ₅)) φ = f₀
    K δ + ½ φᵀ Γ'(δ₅) φ e₅ + D ω_s 1 = T
"""
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Optional, Tuple

import numpy as np
from scipy import linalg
from tenacity import Retrying, retry_if_exception_type, stop_after_attempt

from .errors import EquilibriumError
from .model import ANGLE_INDEX, N_MASSES, StageSystem
from .state import SystemState

logger = logging.getLogger(__name__)

DEFAULT_DELTA = -0.8
ACCEPT_TOL = 1.0e-8
NEWTON_TOL = 1.0e-12
MAX_ITER = 50
MAX_BACKTRACKS = 30


def guess_grid() -> List[float]:
    """Fallback δ₅ guesses −π, −π+π/8, …, π."""
    return [-math.pi + k * math.pi / 8.0 for k in range(17)]


def rotation(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def node_pair_positions(stage: StageSystem) -> List[Tuple[int, int]]:
    """(α, β) positions of every node pair still present in the stage."""
    n = stage.topology.n
    return [
        (k, k + 1)
        for k, original in enumerate(stage.origin)
        if original < 2 * n and original % 2 == 0
    ]


def power_angle(theta5: float, node1_flux: np.ndarray) -> float:
    """θ₅ − arg(Ψ₁α + iΨ₁β) in degrees, wrapped to (−180, 180]."""
    angle = theta5 - math.atan2(node1_flux[1], node1_flux[0])
    wrapped = math.remainder(angle, 2.0 * math.pi)
    return math.degrees(wrapped if wrapped != -math.pi else math.pi)


@dataclass(frozen=True)
class XYSystem:
    """Autonomous xy-frame system of one stage."""
    stage: StageSystem

    @property
    def omega_s(self) -> float:
        return self.stage.omega_s

    @cached_property
    def kj(self) -> np.ndarray:
        return self.stage.kj

    @cached_property
    def f0(self) -> np.ndarray:
        return self.stage.forcing_xy()

    @cached_property
    def omega_vec(self) -> np.ndarray:
        return self.omega_s * np.ones(N_MASSES)

    @cached_property
    def _constant(self) -> np.ndarray:
        return self.stage.KL + self.omega_s * self.kj @ np.diag(self.stage.kr)

    @property
    def dim(self) -> int:
        return self.stage.dim

    def n_xy(self, delta5: float) -> np.ndarray:
        """K_L + ω_s K_j K_R + Γ(δ₅)."""
        return self._constant + self.stage.gamma(delta5)

    def xy_residual(self, phi: np.ndarray, delta: np.ndarray) -> np.ndarray:
        """
        Stacked electrical and mechanical equilibrium residual.

        Args:
            phi: xy-frame flux (stage coordinates)
            delta: Rotor angles relative to the synchronous frame

        Returns:
            np.ndarray: Residual of length dim + 6
        """
        delta5 = delta[ANGLE_INDEX]
        electrical = self.n_xy(delta5) @ phi - self.f0
        mechanical = self.stage.stiffness @ delta + self.stage.damping @ self.omega_vec - self.stage.torque
        mechanical[ANGLE_INDEX] += 0.5 * phi @ self.stage.d_gamma(delta5) @ phi
        return np.concatenate([electrical, mechanical])

    def jacobian(self, phi: np.ndarray, delta: np.ndarray) -> np.ndarray:
        m = self.dim
        delta5 = delta[ANGLE_INDEX]
        d_gamma_phi = self.stage.d_gamma(delta5) @ phi
        jac = np.zeros((m + N_MASSES, m + N_MASSES))
        jac[:m, :m] = self.n_xy(delta5)
        jac[:m, m + ANGLE_INDEX] = d_gamma_phi
        jac[m:, m:] = self.stage.stiffness
        jac[m + ANGLE_INDEX, :m] = d_gamma_phi
        jac[m + ANGLE_INDEX, m + ANGLE_INDEX] += 0.5 * phi @ self.stage.d2_gamma(delta5) @ phi
        return jac

    def scaled_norm(self, residual: np.ndarray) -> float:
        m = self.dim
        electrical = np.linalg.norm(residual[:m]) / max(np.linalg.norm(self.f0), 1e-300)
        mechanical = np.linalg.norm(residual[m:]) / max(np.linalg.norm(self.stage.torque), 1e-300)
        return max(electrical, mechanical)

    def initial_phi(self, delta5: float) -> np.ndarray:
        """Electrical part of a guess: linear solve of the flux equation at fixed δ₅."""
        try:
            return linalg.solve(self.n_xy(delta5), self.f0)
        except linalg.LinAlgError:
            return np.zeros(self.dim)


@dataclass(frozen=True)
class EquilibriumPoint:
    """
    Solved xy-frame operating point.

    Attributes:
        phi: Electrical state in stage coordinates (V·s)
        delta: Rotor angles (rad)
        residual_norm: Scaled residual at the solution
        iterations: Newton iterations used
        stage: Stage name
        residual_history: Scaled residual per iteration
    """
    phi: np.ndarray
    delta: np.ndarray
    residual_norm: float
    iterations: int
    stage: str = ""
    omega_s: float = 0.0
    residual_history: Tuple[float, ...] = field(default=(), repr=False)

    @property
    def power_angle_deg(self) -> float:
        """δ₅ − arg of the node-1 flux φ₁ (frame independent)."""
        return power_angle(self.delta[ANGLE_INDEX], self.phi[:2])


def solve_equilibrium(
    sys: XYSystem,
    guess: Optional[np.ndarray] = None,
    tol: float = NEWTON_TOL,
    accept_tol: float = ACCEPT_TOL,
    max_iter: int = MAX_ITER
) -> EquilibriumPoint:
    """
    Damped Newton solve of the xy equilibrium equations.

    Args:
        sys: xy-frame system
        guess: Initial rotor angles δ (defaults to −0.8·1); φ starts from the
            linear flux solve at δ₅
        tol: Scaled residual at which iteration stops
        accept_tol: Largest scaled residual accepted as converged
        max_iter: Iteration cap

    Returns:
        EquilibriumPoint: Converged operating point

    Raises:
        EquilibriumError: If the iteration stalls above accept_tol
    """
    m = sys.dim
    delta = np.full(N_MASSES, DEFAULT_DELTA) if guess is None else np.array(guess, dtype=float)
    x = np.concatenate([sys.initial_phi(delta[ANGLE_INDEX]), delta])
    residual = sys.xy_residual(x[:m], x[m:])
    norm = sys.scaled_norm(residual)
    history = [norm]

    for iteration in range(1, max_iter + 1):
        if norm <= tol:
            break
        try:
            step = linalg.solve(sys.jacobian(x[:m], x[m:]), -residual)
        except linalg.LinAlgError as e:
            raise EquilibriumError(f"Singular equilibrium Jacobian: {e}", residual=norm) from e

        damping = 1.0
        for _ in range(MAX_BACKTRACKS):
            trial = x + damping * step
            trial_residual = sys.xy_residual(trial[:m], trial[m:])
            trial_norm = sys.scaled_norm(trial_residual)
            if np.isfinite(trial_norm) and trial_norm < norm:
                break
            damping *= 0.5
        else:
            break

        x, residual, norm = trial, trial_residual, trial_norm
        history.append(norm)
        logger.debug(f"Equilibrium Newton iteration {iteration}: residual={norm:.3e}, damping={damping:g}")

    if not norm <= accept_tol:
        raise EquilibriumError(
            f"Equilibrium Newton stalled for stage {sys.stage.name} at residual {norm:.3e}",
            residual=norm,
        )
    return EquilibriumPoint(
        phi=x[:m],
        delta=x[m:],
        residual_norm=norm,
        iterations=len(history) - 1,
        stage=sys.stage.name,
        omega_s=sys.omega_s,
        residual_history=tuple(history),
    )


def find_equilibrium(sys: XYSystem, guess: Optional[np.ndarray] = None) -> EquilibriumPoint:
    """
    solve_equilibrium with fallback over the δ₅ guess grid.

    The caller's guess (or the default) is tried first, then δ = δ₅·1 for
    every δ₅ of guess_grid.

    Raises:
        EquilibriumError: If every guess fails
    """
    first = np.full(N_MASSES, DEFAULT_DELTA) if guess is None else np.asarray(guess, dtype=float)
    guesses = [first] + [np.full(N_MASSES, delta5) for delta5 in guess_grid()]

    for attempt in Retrying(
        stop=stop_after_attempt(len(guesses)),
        retry=retry_if_exception_type(EquilibriumError),
        reraise=True,
    ):
        with attempt:
            number = attempt.retry_state.attempt_number
            if number > 1:
                logger.warning(
                    f"Equilibrium retry {number - 1} for stage {sys.stage.name} "
                    f"from δ₅={guesses[number - 1][ANGLE_INDEX]:.4f}"
                )
            point = solve_equilibrium(sys, guesses[number - 1])
    logger.info(
        f"Stage {sys.stage.name} equilibrium: δ₅={point.delta[ANGLE_INDEX]:.6f} rad, "
        f"power angle={point.power_angle_deg:.4f} deg, residual={point.residual_norm:.2e}, "
        f"iterations={point.iterations}"
    )
    return point


def to_alpha_beta(
    sys: XYSystem,
    t: float,
    phi: np.ndarray,
    delta: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Rotate xy quantities into the stationary αβ frame.

    Args:
        sys: xy-frame system fixing the node-pair layout and ω_s
        t: Time (s)
        phi: xy flux
        delta: Rotor angles relative to the synchronous frame

    Returns:
        Tuple[np.ndarray, np.ndarray]: (Ψ, θ) with θ = δ + ω_s t·1
    """
    R = rotation(sys.omega_s * t)
    psi = np.array(phi, dtype=float)
    for a, b in node_pair_positions(sys.stage):
        psi[[a, b]] = R @ phi[[a, b]]
    return psi, np.asarray(delta, dtype=float) + sys.omega_s * t


def from_alpha_beta(
    sys: XYSystem,
    t: float,
    psi: np.ndarray,
    theta: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Inverse of to_alpha_beta."""
    R = rotation(-sys.omega_s * t)
    phi = np.array(psi, dtype=float)
    for a, b in node_pair_positions(sys.stage):
        phi[[a, b]] = R @ psi[[a, b]]
    return phi, np.asarray(theta, dtype=float) - sys.omega_s * t


def alpha_beta_rate(sys: XYSystem, t: float, phi: np.ndarray, phi_dot: Optional[np.ndarray] = None) -> np.ndarray:
    """Ψ̇ = R(ω_s t)(φ̇ + ω_s K_j φ) on node pairs; winding rates are φ̇ itself."""
    phi_dot = np.zeros_like(phi) if phi_dot is None else phi_dot
    rate = np.array(phi_dot, dtype=float)
    R = rotation(sys.omega_s * t)
    xy_rate = phi_dot + sys.omega_s * sys.kj @ phi
    for a, b in node_pair_positions(sys.stage):
        rate[[a, b]] = R @ xy_rate[[a, b]]
    return rate


def equilibrium_state(sys: XYSystem, point: EquilibriumPoint, t: float = 0.0) -> SystemState:
    """Full αβ state of the stage sitting on the operating point at time t."""
    psi, theta = to_alpha_beta(sys, t, point.phi, point.delta)
    return SystemState(
        psi_dot=alpha_beta_rate(sys, t, point.phi),
        psi=psi,
        theta_dot=sys.omega_vec.copy(),
        theta=theta,
        t=t,
        stage=sys.stage.name,
        reduced=False,
    )
