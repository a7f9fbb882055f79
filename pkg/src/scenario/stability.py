"""
Stability verdicts for fault-transient trajectories.
"""
import logging
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Optional

import numpy as np
import pandas as pd

from ..core.errors import ConfigError
from ..integrators.base import StopIntegration

logger = logging.getLogger(__name__)


class Verdict(str, Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class StabilityCriteria:
    """
    Thresholds turning a trajectory into a verdict.

    Attributes:
        omega_tol: Largest end-window mean |Δω| of a stable run (rad/s)
        angle_target: Post-fault equilibrium power angle (deg); None means
            the computed final-stage equilibrium angle
        angle_window: Length of the end window (s)
        pole_slip_limit: Largest |power angle − target| before the run is unstable (deg)
        omega_limit: Largest |Δω| before the run is unstable (rad/s)
        angle_band: Largest |end-window mean angle − target| of a stable run (deg)
        stop_on_unstable: End the integration as soon as instability is detected
    """
    omega_tol: float = 0.5
    angle_target: Optional[float] = None
    angle_window: float = 5.0
    pole_slip_limit: float = 180.0
    omega_limit: float = 50.0
    angle_band: float = 5.0
    stop_on_unstable: bool = True

    def __post_init__(self):
        for name in ("omega_tol", "angle_window", "pole_slip_limit", "omega_limit", "angle_band"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"Stability criterion {name} must be positive")

    @classmethod
    def from_dict(cls, doc: dict) -> "StabilityCriteria":
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"Unknown stability criteria: {sorted(unknown)}")
        return cls(**doc)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class VerdictReport:
    """Verdict plus the quantities it was derived from."""
    verdict: Verdict
    reason: str
    angle_target: float
    window_mean_abs_delta_omega: float = float("nan")
    window_mean_power_angle: float = float("nan")
    max_abs_delta_omega: float = float("nan")
    max_angle_deviation: float = float("nan")

    def to_dict(self) -> dict:
        data = asdict(self)
        data["verdict"] = self.verdict.value
        return data


class StabilityMonitor:
    """Per-step instability check that stops a run once the verdict can only be unstable."""

    def __init__(self, criteria: StabilityCriteria, angle_target: float, final_stage: str):
        self.criteria = criteria
        self.angle_target = angle_target
        self.final_stage = final_stage

    def check(self, stage: str, delta_omega: float, power_angle_deg: float):
        if not self.criteria.stop_on_unstable:
            return
        if abs(delta_omega) > self.criteria.omega_limit:
            raise StopIntegration(f"|Δω|={abs(delta_omega):.2f} rad/s exceeds {self.criteria.omega_limit}")
        if stage == self.final_stage and abs(power_angle_deg - self.angle_target) > self.criteria.pole_slip_limit:
            raise StopIntegration(f"pole slip: power angle {power_angle_deg:.1f} deg")


def stability_verdict(
    trajectory: pd.DataFrame,
    criteria: StabilityCriteria,
    angle_target: Optional[float] = None,
    final_stage: str = "III",
    aborted: bool = False
) -> VerdictReport:
    """
    Judge a trajectory stable, unstable or inconclusive.

    Unstable when |power angle − target| exceeds the pole-slip limit after the
    final stage begins, or |Δω| ever exceeds omega_limit. Stable when the end
    window has mean |Δω| ≤ omega_tol and mean power angle within angle_band of
    the target. Aborted runs are inconclusive unless already unstable.

    Args:
        trajectory: Rows with t, stage, delta_omega, power_angle_deg
        criteria: Thresholds
        angle_target: Target angle used when criteria.angle_target is None
        final_stage: Name of the post-fault stage
        aborted: Whether the run ended on a step failure

    Returns:
        VerdictReport: Verdict and supporting statistics
    """
    target = criteria.angle_target if criteria.angle_target is not None else angle_target
    if target is None:
        raise ConfigError("No power-angle target available for the stability verdict")
    if trajectory.empty:
        return VerdictReport(Verdict.INCONCLUSIVE, "empty trajectory", target)

    delta_omega = trajectory["delta_omega"].to_numpy()
    post = trajectory[trajectory["stage"] == final_stage]
    deviation = np.abs(post["power_angle_deg"].to_numpy() - target)
    max_abs_omega = float(np.abs(delta_omega).max())
    max_deviation = float(deviation.max()) if deviation.size else float("nan")

    if max_abs_omega > criteria.omega_limit:
        return VerdictReport(
            Verdict.UNSTABLE, f"|Δω| reached {max_abs_omega:.2f} rad/s", target,
            max_abs_delta_omega=max_abs_omega, max_angle_deviation=max_deviation,
        )
    if deviation.size and max_deviation > criteria.pole_slip_limit:
        return VerdictReport(
            Verdict.UNSTABLE, f"power angle left the ±{criteria.pole_slip_limit:g} deg band", target,
            max_abs_delta_omega=max_abs_omega, max_angle_deviation=max_deviation,
        )
    if aborted:
        return VerdictReport(
            Verdict.INCONCLUSIVE, "integration aborted", target,
            max_abs_delta_omega=max_abs_omega, max_angle_deviation=max_deviation,
        )
    if post.empty:
        return VerdictReport(Verdict.INCONCLUSIVE, f"stage {final_stage} never reached", target)

    t_last = float(post["t"].iloc[-1])
    window = post[post["t"] >= t_last - criteria.angle_window]
    mean_omega = float(np.abs(window["delta_omega"].to_numpy()).mean())
    mean_angle = float(window["power_angle_deg"].to_numpy().mean())
    report = dict(
        angle_target=target,
        window_mean_abs_delta_omega=mean_omega,
        window_mean_power_angle=mean_angle,
        max_abs_delta_omega=max_abs_omega,
        max_angle_deviation=max_deviation,
    )
    if mean_omega <= criteria.omega_tol and abs(mean_angle - target) <= criteria.angle_band:
        return VerdictReport(Verdict.STABLE, "end window settled at the target", **report)
    return VerdictReport(Verdict.INCONCLUSIVE, "end window has not settled", **report)
