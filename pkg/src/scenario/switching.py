"""
State transfer between consecutive network stages.

At a switch the mechanical state is kept, shorted components vanish,
fluxes of finite-conductance components are copied, the zero-conductance
fluxes follow from the next stage's constraint and every voltage is
rebuilt from the next stage's equations.
"""
import logging
from dataclasses import dataclass

import numpy as np

from ..core.errors import SwitchingError
from ..core.model import ANGLE_INDEX, StageSystem
from ..core.reduction import ReducedSystem
from ..core.state import SystemState

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SwitchEvent:
    """Record of one stage switch."""
    t: float
    from_stage: str
    to_stage: str
    constraint_residual: float
    flux_norm: float
    continuity_error: float

    @property
    def relative_residual(self) -> float:
        return self.constraint_residual / max(self.flux_norm, 1e-300)

    def to_dict(self) -> dict:
        return {
            "t": self.t,
            "from": self.from_stage,
            "to": self.to_stage,
            "constraint_residual": self.constraint_residual,
            "relative_residual": self.relative_residual,
            "continuity_error": self.continuity_error,
        }


@dataclass(frozen=True)
class SwitchResult:
    """Post-switch state in reduced and full next-stage coordinates."""
    reduced: SystemState
    full: SystemState
    event: SwitchEvent


def switch_state(prev_stage: StageSystem, next_stage: ReducedSystem, state_at_switch: SystemState) -> SwitchResult:
    """
    Map a state at the end of one stage to consistent initial data of the next.

    Args:
        prev_stage: Stage that was running
        next_stage: Reduced system of the stage that starts
        state_at_switch: State in prev_stage's full coordinates

    Returns:
        SwitchResult: Next-stage state, reduced and full, plus the switch record

    Raises:
        SwitchingError: If a finite-conductance component of the next stage
            has no counterpart in the previous stage
    """
    if state_at_switch.reduced:
        raise SwitchingError("Switching expects a state in full stage coordinates")
    stage = next_stage.stage
    partition = stage.partition
    if stage.topology.n != prev_stage.topology.n:
        raise SwitchingError(f"Stages {prev_stage.name} and {stage.name} have different node counts")

    psi_tilde = np.zeros(len(partition.lambda2))
    for j, position in enumerate(partition.lambda2):
        original = stage.origin[position]
        if original in prev_stage.origin:
            psi_tilde[j] = state_at_switch.psi[prev_stage.origin.index(original)]
        elif original in prev_stage.removed:
            psi_tilde[j] = 0.0
        else:
            raise SwitchingError(
                f"Component {original + 1} of stage {stage.name} has no counterpart in stage {prev_stage.name}"
            )

    theta = state_at_switch.theta.copy()
    theta_dot = state_at_switch.theta_dot.copy()
    theta5 = theta[ANGLE_INDEX]
    t = state_at_switch.t

    psi = next_stage.lift(theta5, psi_tilde)
    N = stage.n_matrix(theta5)
    l1, l2 = list(partition.lambda1), list(partition.lambda2)
    psi_tilde_dot = (stage.source(t)[l2] - N[l2, :] @ psi) / next_stage.kr
    psi_dot = next_stage.lift_rate(theta5, theta_dot[ANGLE_INDEX], psi_tilde, psi_tilde_dot)

    residual = float(np.linalg.norm(N[l1, :] @ psi)) if l1 else 0.0
    continuity = max(
        (
            abs(psi[position] - state_at_switch.psi[prev_stage.origin.index(stage.origin[position])])
            for position in l2
            if stage.origin[position] in prev_stage.origin
        ),
        default=0.0,
    )
    event = SwitchEvent(
        t=t,
        from_stage=prev_stage.name,
        to_stage=stage.name,
        constraint_residual=residual,
        flux_norm=float(np.linalg.norm(psi)),
        continuity_error=float(continuity),
    )
    logger.info(
        f"Switch {prev_stage.name} -> {stage.name} at t={t:.6f}: "
        f"constraint residual {event.relative_residual:.2e} (relative)"
    )

    full = SystemState(psi_dot=psi_dot, psi=psi, theta_dot=theta_dot, theta=theta, t=t, stage=stage.name)
    reduced = SystemState(
        psi_dot=psi_tilde_dot,
        psi=psi_tilde,
        theta_dot=theta_dot.copy(),
        theta=theta.copy(),
        t=t,
        stage=stage.name,
        reduced=True,
    )
    return SwitchResult(reduced=reduced, full=full, event=event)
