"""
Per-step diagnostics: speed deviation, electromagnetic torque, power angle and stored energy.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
import pandas as pd

from ..core.equilibrium import power_angle
from ..core.model import ANGLE_INDEX, N_MASSES, StageSystem, electrical_label
from ..core.reduction import ReducedSystem
from ..core.state import SystemState
from .stability import StabilityMonitor

logger = logging.getLogger(__name__)


def trajectory_columns(n: int) -> List[str]:
    """CSV column order: scalars, fluxes by original label, angles, energy."""
    psi = [f"psi_{electrical_label(i, n)}" for i in range(2 * n + 4)]
    theta = [f"theta_{i + 1}" for i in range(N_MASSES)]
    return ["t", "stage", "delta_omega", "torque_em", "power_angle_deg"] + psi + theta + ["hamiltonian"]


class PowerAngleTracker:
    """Unwraps the power angle so consecutive samples differ by less than 180 deg."""

    def __init__(self):
        self.value: Optional[float] = None
        self.max_jump = 0.0

    def update(self, raw_deg: float) -> float:
        if self.value is None:
            self.value = raw_deg
            return self.value
        jump = math.remainder(raw_deg - self.value, 360.0)
        self.max_jump = max(self.max_jump, abs(jump))
        self.value += jump
        return self.value


@dataclass
class StageContext:
    """What the recorder needs to interpret states of the running stage."""
    reduced_system: ReducedSystem
    reduced: bool
    energy: Callable[[SystemState], float]

    @property
    def stage(self) -> StageSystem:
        return self.reduced_system.stage

    def node1_positions(self) -> Tuple[int, int]:
        stage = self.stage
        positions = (stage.origin.index(0), stage.origin.index(1))
        if self.reduced:
            lambda2 = list(self.reduced_system.partition.lambda2)
            return lambda2.index(positions[0]), lambda2.index(positions[1])
        return positions

    def full_fluxes(self, state: SystemState) -> Tuple[np.ndarray, np.ndarray]:
        """(Ψ, Ψ̇) in the stage's full coordinates."""
        if not self.reduced:
            return state.psi, state.psi_dot
        theta5 = state.theta[ANGLE_INDEX]
        psi = self.reduced_system.lift(theta5, state.psi)
        psi_dot = self.reduced_system.lift_rate(theta5, state.theta_dot[ANGLE_INDEX], state.psi, state.psi_dot)
        return psi, psi_dot

    def torque(self, state: SystemState) -> float:
        theta5 = state.theta[ANGLE_INDEX]
        if self.reduced:
            return self.reduced_system.electromagnetic_torque(theta5, state.psi)
        return 0.5 * float(state.psi @ self.stage.d_gamma(theta5) @ state.psi)


class TrajectoryRecorder:
    """
    Observer collecting diagnostics rows across stages.

    Must be called on every step: the power angle is unwrapped and the
    stability monitor checked per step, while rows are kept only on the
    decimated grid and at stage starts.

    Args:
        n: Network node count
        omega_s: Synchronous speed (rad/s)
        h: Step size (s)
        decimation: Keep a row every ``decimation`` steps
        monitor: Optional early-stop monitor
    """
    def __init__(
        self,
        n: int,
        omega_s: float,
        h: float,
        decimation: int = 1,
        monitor: Optional[StabilityMonitor] = None
    ):
        if decimation < 1:
            raise ValueError("Decimation must be at least 1")
        self.n = n
        self.omega_s = omega_s
        self.h = h
        self.decimation = decimation
        self.monitor = monitor
        self.tracker = PowerAngleTracker()
        self.rows: List[list] = []
        self.columns = trajectory_columns(n)
        self._context: Optional[StageContext] = None
        self._node1 = (0, 1)
        self._force_next = False

    def enter_stage(self, context: StageContext):
        self._context = context
        self._node1 = context.node1_positions()
        self._force_next = True

    def __call__(self, state: SystemState):
        context = self._context
        theta5 = state.theta[ANGLE_INDEX]
        delta_omega = state.theta_dot[ANGLE_INDEX] - self.omega_s
        flux = np.array([state.psi[self._node1[0]], state.psi[self._node1[1]]])
        angle = self.tracker.update(power_angle(theta5, flux))

        if self._force_next or int(round(state.t / self.h)) % self.decimation == 0:
            self._force_next = False
            self.rows.append(self._row(context, state, delta_omega, angle))
        if self.monitor is not None:
            self.monitor.check(context.stage.name, delta_omega, angle)

    def _row(self, context: StageContext, state: SystemState, delta_omega: float, angle: float) -> list:
        psi, _ = context.full_fluxes(state)
        psi_original = np.zeros(2 * self.n + 4)
        psi_original[list(context.stage.origin)] = psi
        return (
            [state.t, context.stage.name, delta_omega, context.torque(state), angle]
            + psi_original.tolist()
            + state.theta.tolist()
            + [context.energy(state)]
        )

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=self.columns)
