"""
Implicit Runge-Kutta steps on the port-Hamiltonian descriptor system.

Stage equations, solved monolithically with Newton:

    M k_i = (P − Q) z(X_i) + F u(X_i),    X_i = x₀ + h Σ_j a_ij k_j
    x₁ = x₀ + h Σ_j b_j k_j
"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import linalg

from ..core.errors import StepFailure
from ..core.state import SystemState
from .base import BaseIntegrator
from .port_hamiltonian import PHSystem

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RKTableau:
    """Butcher coefficients of an s-stage implicit Runge-Kutta method."""
    name: str
    a: np.ndarray
    b: np.ndarray
    order: int

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if a.shape != (len(b), len(b)):
            raise ValueError(f"Tableau {self.name}: a must be {len(b)}x{len(b)}")
        if abs(b.sum() - 1.0) > 1e-14:
            raise ValueError(f"Tableau {self.name}: weights must sum to one")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def s(self) -> int:
        return len(self.b)


IMPLICIT_EULER = RKTableau("implicit-euler", a=[[1.0]], b=[1.0], order=1)
IMPLICIT_MIDPOINT = RKTableau("implicit-midpoint", a=[[0.5]], b=[1.0], order=2)


@dataclass(frozen=True)
class NewtonSettings:
    """
    Stage Newton controls.

    Attributes:
        tol_rel: Relative tolerance on residual and update tests
        tol_abs: Absolute tolerance
        max_iter: Iteration cap per step
        jacobian_mode: "analytic" or "finite-difference"
    """
    tol_rel: float = 1.0e-10
    tol_abs: float = 1.0e-12
    max_iter: int = 25
    jacobian_mode: str = "analytic"

    def __post_init__(self):
        if not (self.tol_rel > 0 and self.tol_abs > 0):
            raise ValueError("Newton tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError("Newton max_iter must be at least 1")
        if self.jacobian_mode not in ("analytic", "finite-difference"):
            raise ValueError(f"Unknown Jacobian mode '{self.jacobian_mode}'")

    @classmethod
    def from_dict(cls, doc: dict) -> "NewtonSettings":
        return cls(**{k: doc[k] for k in ("tol_rel", "tol_abs", "max_iter", "jacobian_mode") if k in doc})

    def to_dict(self) -> dict:
        return {
            "tol_rel": self.tol_rel,
            "tol_abs": self.tol_abs,
            "max_iter": self.max_iter,
            "jacobian_mode": self.jacobian_mode,
        }


@dataclass
class StepResult:
    """Outcome of one converged rk_step."""
    x_next: np.ndarray
    stages: np.ndarray
    iterations: int
    residual: float


def _finite_difference(fn, x: np.ndarray, eps: float = 1.0e-7) -> np.ndarray:
    base = fn(x)
    jac = np.zeros((len(base), len(x)))
    for j in range(len(x)):
        step = eps * max(1.0, abs(x[j]))
        shifted = x.copy()
        shifted[j] += step
        jac[:, j] = (fn(shifted) - base) / step
    return jac


def _block_scale(sys: PHSystem, x: np.ndarray) -> np.ndarray:
    """Per-component magnitude: the max |x| over the component's block."""
    scale = np.empty_like(x)
    for sl in (sys.sl_psi_dot, sys.sl_psi, sys.sl_theta_dot, sys.sl_theta):
        block = x[sl]
        scale[sl] = np.abs(block).max() if block.size else 0.0
    scale[sys.i_time] = abs(x[sys.i_time])
    return scale


def stage_points(x0: np.ndarray, h: float, stages: np.ndarray, tableau: RKTableau) -> np.ndarray:
    """X_i = x₀ + h Σ_j a_ij k_j for every stage."""
    return x0[None, :] + h * tableau.a @ stages


def stage_residual(sys: PHSystem, x0: np.ndarray, h: float, stages: np.ndarray, tableau: RKTableau):
    """Stacked G_i = M k_i − (P − Q)z(X_i) − F u(X_i) and the scale s_i of each entry."""
    points = stage_points(x0, h, stages, tableau)
    residual = np.empty_like(stages)
    scale = np.empty_like(stages)
    for i, X in enumerate(points):
        z, u = sys.z(X), sys.u(X)
        Mk = sys.M @ stages[i]
        Pz, Qz, Fu = sys.P @ z, sys.Q @ z, (sys.F - sys.V) @ u
        residual[i] = Mk - (Pz - Qz) - Fu
        scale[i] = np.abs(Mk) + np.abs(Pz) + np.abs(Qz) + np.abs(Fu)
    return residual, scale, points


def _newton_matrix(sys: PHSystem, h: float, points: np.ndarray, tableau: RKTableau, mode: str) -> np.ndarray:
    s, size = tableau.s, sys.size
    jac = np.zeros((s * size, s * size))
    for i, X in enumerate(points):
        if mode == "analytic":
            dz, du = sys.dz(X), sys.du(X)
        else:
            dz, du = _finite_difference(sys.z, X), _finite_difference(sys.u, X)
        coupling = sys.PQ @ dz + (sys.F - sys.V) @ du
        for j in range(s):
            block = -h * tableau.a[i, j] * coupling
            if i == j:
                block = block + sys.M
            jac[i * size:(i + 1) * size, j * size:(j + 1) * size] = block
    return jac


def rk_step(
    sys: PHSystem,
    x0: np.ndarray,
    h: float,
    tableau: RKTableau,
    newton: NewtonSettings = NewtonSettings(),
    guess: Optional[np.ndarray] = None
) -> StepResult:
    """
    Advance the descriptor system by one implicit Runge-Kutta step.

    Converges when every stage residual satisfies |G| ≤ tol_abs + tol_rel·s,
    or when the last update moves every stage point by less than
    tol_abs + tol_rel·(block magnitude).

    Args:
        sys: Port-Hamiltonian system
        x0: State at the start of the step
        h: Step size (> 0)
        tableau: Runge-Kutta coefficients
        newton: Newton controls
        guess: Initial stage derivatives (s × size); defaults to the kinematic guess

    Returns:
        StepResult: Next state, converged stages, iteration count and scaled residual

    Raises:
        StepFailure: If Newton does not converge within max_iter
    """
    if h <= 0:
        raise StepFailure("Step size must be positive", t=x0[sys.i_time], h=h, method=tableau.name)
    stages = np.tile(sys.initial_stage_guess(x0), (tableau.s, 1)) if guess is None else np.array(guess, dtype=float)
    x_scale = _block_scale(sys, x0)
    a_max = np.abs(tableau.a).max()
    scaled = np.inf

    for iteration in range(1, newton.max_iter + 1):
        residual, scale, points = stage_residual(sys, x0, h, stages, tableau)
        scaled = float(np.max(np.abs(residual) / (newton.tol_abs + newton.tol_rel * scale)))
        if not np.isfinite(scaled):
            break
        if scaled <= 1.0:
            return _finish(sys, x0, h, stages, tableau, iteration - 1, scaled)

        matrix = _newton_matrix(sys, h, points, tableau, newton.jacobian_mode)
        try:
            update = linalg.lu_solve(linalg.lu_factor(matrix), -residual.reshape(-1))
        except (linalg.LinAlgError, ValueError) as e:
            raise StepFailure(
                f"Singular stage Jacobian: {e}", t=x0[sys.i_time], h=h, residual=scaled, method=tableau.name
            ) from e
        update = update.reshape(stages.shape)
        stages = stages + update
        logger.debug(f"{tableau.name} Newton iteration {iteration}: scaled residual={scaled:.3e}")

        moved = h * a_max * np.abs(update).max(axis=0)
        if np.all(moved <= newton.tol_abs + newton.tol_rel * x_scale):
            return _finish(sys, x0, h, stages, tableau, iteration, scaled)

    raise StepFailure(
        f"Stage Newton did not converge in {newton.max_iter} iterations",
        t=x0[sys.i_time],
        h=h,
        residual=scaled,
        method=tableau.name,
    )


def _finish(sys, x0, h, stages, tableau, iterations, scaled) -> StepResult:
    x_next = x0 + h * tableau.b @ stages
    x_next[sys.i_time] = x0[sys.i_time] + h
    return StepResult(x_next=x_next, stages=stages, iterations=iterations, residual=scaled)


def dirac_residual(
    sys: PHSystem,
    x0: np.ndarray,
    h: float,
    stages: np.ndarray,
    tableau: RKTableau = IMPLICIT_MIDPOINT
) -> float:
    """
    Largest defect of the stage flow/effort pairs from the discrete Dirac structure.

    Builds v_f = (−M k_i; y(X_i); z(X_i); u(X_i)) and
    v_e = (z(X_i); u(X_i); −B(z; u)) and returns max_i ‖v_f + Ω v_e‖ with
    Ω = [[A, I], [−I, 0]].

    Args:
        sys: Port-Hamiltonian system
        x0: State at the start of the step
        h: Step size
        stages: Stage derivatives k_i
        tableau: Tableau that produced the stages

    Returns:
        float: Non-negative residual
    """
    n2 = 2 * sys.size
    omega = np.block([[sys.A_big, np.eye(n2)], [-np.eye(n2), np.zeros((n2, n2))]])
    worst = 0.0
    for i, X in enumerate(stage_points(x0, h, stages, tableau)):
        z, u = sys.z(X), sys.u(X)
        effort = np.concatenate([z, u])
        v_f = np.concatenate([-sys.M @ stages[i], sys.y(X), z, u])
        v_e = np.concatenate([effort, -sys.B_big @ effort])
        worst = max(worst, float(np.linalg.norm(v_f + omega @ v_e)))
    return worst


class StructurePreservingIntegrator(BaseIntegrator):
    """
    Fixed-step implicit Runge-Kutta integrator on a PHSystem.

    A step whose Newton solve fails is retried once as two half steps.
    """
    reduced = True

    def __init__(
        self,
        sys: PHSystem,
        h: float,
        tableau: RKTableau,
        newton: NewtonSettings = NewtonSettings(),
        name: str = "",
        check_dirac: bool = True
    ):
        super().__init__(h=h, name=name or tableau.name)
        self.sys = sys
        self.tableau = tableau
        self.newton = newton
        self.check_dirac = check_dirac
        self._guess = None

    @property
    def electrical_dim(self) -> int:
        return self.sys.m

    def _single(self, x: np.ndarray, h: float, guess) -> StepResult:
        result = rk_step(self.sys, x, h, self.tableau, self.newton, guess)
        self.stats.record_newton(result.iterations)
        if self.check_dirac:
            self.stats.record_dirac(
                dirac_residual(self.sys, x, h, result.stages, self.tableau),
                self.dirac_bound(x, h, result),
            )
        return result

    def dirac_bound(self, x: np.ndarray, h: float, result: StepResult) -> float:
        """10·tol·(1 + ‖z‖ + ‖u‖) at the first stage point."""
        X = stage_points(x, h, result.stages, self.tableau)[0]
        return 10.0 * self.newton.tol_rel * (1.0 + np.linalg.norm(self.sys.z(X)) + np.linalg.norm(self.sys.u(X)))

    def advance(self, x: np.ndarray) -> np.ndarray:
        try:
            result = self._single(x, self.h, self._guess)
        except StepFailure as failure:
            logger.warning(f"{failure}; retrying as two half steps")
            self.stats.halvings += 1
            half = self._single(x, 0.5 * self.h, None)
            result = self._single(half.x_next, 0.5 * self.h, half.stages)
            result.x_next[self.sys.i_time] = x[self.sys.i_time] + self.h
        self._guess = result.stages
        return result.x_next

    def step(self, state: SystemState) -> SystemState:
        x_next = self.advance(state.to_vector())
        return SystemState.from_vector(x_next, self.sys.m, stage=state.stage, reduced=state.reduced)

    def energy(self, state: SystemState) -> float:
        return self.sys.hamiltonian(state.to_vector())

    def reset(self):
        super().reset()
        self._guess = None
