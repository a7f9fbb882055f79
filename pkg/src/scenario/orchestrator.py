"""
Three-stage fault transient: pre-fault, ground fault, post-clearing.
"""
import logging
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from ..core.equilibrium import EquilibriumPoint, XYSystem, equilibrium_state, find_equilibrium
from ..core.errors import ConfigError
from ..core.model import StageSystem, stages_from_document
from ..core.reduction import ReducedSystem, reduce
from ..core.state import SystemState
from ..integrators import METHODS, NewtonSettings, create_integrator
from ..integrators.base import IntegrationStats
from .diagnostics import StageContext, TrajectoryRecorder, trajectory_columns
from .stability import StabilityCriteria, StabilityMonitor, Verdict, VerdictReport, stability_verdict
from .switching import SwitchEvent, switch_state

logger = logging.getLogger(__name__)

DEFAULT_STAGE3_DURATION = 60.0


@dataclass(frozen=True)
class ScenarioConfig:
    """
    Fault scenario timing, method and stability criteria.

    Attributes:
        t_fault: Stage I → II switch time (s)
        t_break: Fault duration t_b (s); 0 skips stage II
        stage3_duration: Length of the post-clearing stage (s)
        method: Integration method name
        h: Step size (s)
        decimation: Keep a trajectory row every ``decimation`` steps
        stability: Verdict thresholds
    """
    t_fault: float = 0.1
    t_break: float = 0.5
    stage3_duration: float = DEFAULT_STAGE3_DURATION
    method: str = "sp-midpoint"
    h: float = 1.0e-4
    decimation: int = 100
    stability: StabilityCriteria = field(default_factory=StabilityCriteria)

    def __post_init__(self):
        if not self.t_fault > 0:
            raise ConfigError("t_fault must be positive")
        if self.t_break < 0:
            raise ConfigError("t_break must be non-negative")
        if not self.stage3_duration > 0:
            raise ConfigError("The post-clearing stage needs a positive duration")
        if not self.h > 0:
            raise ConfigError("h must be positive")
        if self.decimation < 1:
            raise ConfigError("decimation must be at least 1")
        if self.method not in METHODS:
            raise ConfigError(f"Unsupported method '{self.method}'; choose one of {', '.join(METHODS)}")

    @property
    def t_horizon(self) -> float:
        return self.t_fault + self.t_break + self.stage3_duration

    def switch_steps(self) -> tuple:
        """Step indices of the two switches, snapped to the h grid."""
        n_fault = int(round(self.t_fault / self.h))
        n_clear = n_fault + int(round(self.t_break / self.h))
        n_end = n_clear + int(round(self.stage3_duration / self.h))
        return n_fault, n_clear, n_end

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "ScenarioConfig":
        doc = dict(doc)
        stability = StabilityCriteria.from_dict(doc.pop("stability", {}) or {})
        horizon = doc.pop("t_horizon", None)
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"Unknown scenario fields: {sorted(unknown)}")
        try:
            config = cls(stability=stability, **doc)
        except TypeError as e:
            raise ConfigError(f"Invalid scenario: {e}") from e
        if horizon is not None:
            config = replace(config, stage3_duration=float(horizon) - config.t_fault - config.t_break)
        return config

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["stability"] = self.stability.to_dict()
        return data


@dataclass
class ScenarioModel:
    """Stages, their reductions and the pre- and post-fault equilibria."""
    stages: Dict[str, StageSystem]
    reduced: Dict[str, ReducedSystem]
    initial: EquilibriumPoint
    target: EquilibriumPoint

    @property
    def stage_names(self) -> List[str]:
        return list(self.stages)

    @property
    def first(self) -> str:
        return self.stage_names[0]

    @property
    def last(self) -> str:
        return self.stage_names[-1]

    @classmethod
    def build(cls, stages: Dict[str, StageSystem]) -> "ScenarioModel":
        if len(stages) != 3:
            raise ConfigError(f"A fault scenario needs exactly three stages, got {len(stages)}")
        reduced = {name: reduce(stage) for name, stage in stages.items()}
        names = list(stages)
        initial = find_equilibrium(XYSystem(stages[names[0]]))
        target = find_equilibrium(XYSystem(stages[names[-1]]), guess=initial.delta)
        return cls(stages=stages, reduced=reduced, initial=initial, target=target)

    @classmethod
    def from_document(cls, doc: Dict[str, Any]) -> "ScenarioModel":
        return cls.build(stages_from_document(doc))

    def initial_state(self) -> SystemState:
        """Stage I state on its operating point at t = 0."""
        return equilibrium_state(XYSystem(self.stages[self.first]), self.initial, 0.0)


@dataclass
class ScenarioResult:
    """Everything a three-stage run produced."""
    config: ScenarioConfig
    trajectory: pd.DataFrame
    report: VerdictReport
    stats: IntegrationStats
    switches: List[SwitchEvent]
    failure: Optional[str] = None
    stopped: Optional[str] = None
    max_angle_jump: float = 0.0
    switch_times: Sequence[float] = ()

    @property
    def verdict(self) -> Verdict:
        return self.report.verdict

    def summary(self, model: ScenarioModel) -> Dict[str, Any]:
        return {
            "verdict": self.report.to_dict(),
            "method": self.config.method,
            "switch_times": list(self.switch_times),
            "switches": [event.to_dict() for event in self.switches],
            "integration": self.stats.to_dict(),
            "failure": self.failure,
            "stopped": self.stopped,
            "max_power_angle_jump_deg": self.max_angle_jump,
            "equilibria": {
                model.first: equilibrium_summary(model, model.first, model.initial),
                model.last: equilibrium_summary(model, model.last, model.target),
            },
        }


def equilibrium_summary(model: ScenarioModel, name: str, point: EquilibriumPoint) -> Dict[str, Any]:
    """Operating point in xy and αβ (t = 0) coordinates."""
    xy = XYSystem(model.stages[name])
    state = equilibrium_state(xy, point, 0.0)
    return {
        "stage": name,
        "power_angle_deg": point.power_angle_deg,
        "residual": point.residual_norm,
        "iterations": point.iterations,
        "phi": point.phi.tolist(),
        "delta": point.delta.tolist(),
        "psi_dot": state.psi_dot.tolist(),
        "psi": state.psi.tolist(),
        "theta": state.theta.tolist(),
        "theta_dot": state.theta_dot.tolist(),
    }


def _to_working(state: SystemState, reduced_system: ReducedSystem, reduced: bool) -> SystemState:
    if not reduced or state.reduced:
        return state
    return replace(
        state,
        psi=reduced_system.restrict(state.psi),
        psi_dot=reduced_system.restrict(state.psi_dot),
        reduced=True,
    )


def _to_full(state: SystemState, reduced_system: ReducedSystem) -> SystemState:
    if not state.reduced:
        return state
    context = StageContext(reduced_system, True, lambda s: float("nan"))
    psi, psi_dot = context.full_fluxes(state)
    return replace(state, psi=psi, psi_dot=psi_dot, reduced=False)


def run_three_stage(
    config: ScenarioConfig,
    model: ScenarioModel,
    newton: NewtonSettings = NewtonSettings()
) -> ScenarioResult:
    """
    Run the fault transient from the pre-fault operating point.

    Stage I is integrated up to t_fault, the state is switched into the fault
    stage, integrated for t_break, switched into the post-clearing stage and
    integrated for stage3_duration. Switch times are snapped to the h grid.

    Args:
        config: Scenario settings
        model: Prepared stages and equilibria
        newton: Stage Newton settings for structure-preserving methods

    Returns:
        ScenarioResult: Trajectory, verdict, switch records and statistics
    """
    names = model.stage_names
    n_fault, n_clear, n_end = config.switch_steps()
    h = config.h
    plan = [(names[0], n_fault), (names[1], n_clear), (names[2], n_end)]
    if n_clear == n_fault:
        logger.info("Zero break time: skipping the fault stage")
        plan = [plan[0], plan[2]]

    target = model.target.power_angle_deg
    monitor = StabilityMonitor(
        config.stability,
        config.stability.angle_target if config.stability.angle_target is not None else target,
        names[-1],
    )
    first_stage = model.stages[names[0]]
    recorder = TrajectoryRecorder(first_stage.topology.n, first_stage.omega_s, h, config.decimation, monitor)
    stats = IntegrationStats()
    switches: List[SwitchEvent] = []
    failure = stopped = None
    previous: Optional[str] = None
    state = model.initial_state()
    logger.info(
        f"Scenario {config.method}: t_fault={n_fault * h:.6g}, t_break={(n_clear - n_fault) * h:.6g}, "
        f"horizon={n_end * h:.6g}, h={h:g}"
    )

    for name, end_step in plan:
        reduced_system = model.reduced[name]
        if previous is not None:
            result = switch_state(model.stages[previous], reduced_system, _to_full(state, model.reduced[previous]))
            switches.append(result.event)
            state = result.full
        integrator = create_integrator(config.method, reduced_system, h, newton)
        state = _to_working(state, reduced_system, integrator.reduced)
        recorder.enter_stage(StageContext(reduced_system, integrator.reduced, integrator.energy))
        logger.info(f"Stage {name}: integrating from t={state.t:.6f} to t={end_step * h:.6f} with {integrator.name}")
        outcome = integrator.integrate(state, end_step * h, observers=[recorder])
        stats.merge(outcome.stats)
        state = outcome.final_state
        previous = name
        if outcome.failure is not None:
            failure = str(outcome.failure)
            break
        if outcome.stopped is not None:
            stopped = outcome.stopped
            break

    trajectory = recorder.to_frame()
    report = stability_verdict(trajectory, config.stability, target, names[-1], aborted=failure is not None)
    logger.info(f"Verdict for t_break={config.t_break:g}: {report.verdict.value} ({report.reason})")
    return ScenarioResult(
        config=config,
        trajectory=trajectory,
        report=report,
        stats=stats,
        switches=switches,
        failure=failure,
        stopped=stopped,
        max_angle_jump=recorder.tracker.max_jump,
        switch_times=(n_fault * h, n_clear * h),
    )


@dataclass
class CompareResult:
    first: ScenarioResult
    second: ScenarioResult
    errors: pd.DataFrame


def compare(
    config: ScenarioConfig,
    model: ScenarioModel,
    method_a: str,
    method_b: str,
    newton: NewtonSettings = NewtonSettings()
) -> CompareResult:
    """
    Run one scenario with two methods and tabulate their pointwise differences.

    Rows are paired on (t, stage); ``error_norm`` is the max-norm of the flux
    difference in original coordinates.
    """
    first = run_three_stage(replace(config, method=method_a), model, newton)
    second = run_three_stage(replace(config, method=method_b), model, newton)
    n = model.stages[model.first].topology.n
    psi_columns = [c for c in trajectory_columns(n) if c.startswith("psi_")]
    keys = ["t", "stage"]
    left = first.trajectory.drop_duplicates(subset=keys, keep="last")
    right = second.trajectory.drop_duplicates(subset=keys, keep="last")
    merged = left.merge(right, on=keys, suffixes=("_a", "_b"))
    diff = merged[[f"{c}_a" for c in psi_columns]].to_numpy() - merged[[f"{c}_b" for c in psi_columns]].to_numpy()
    errors = pd.DataFrame({
        "t": merged["t"],
        "stage": merged["stage"],
        "error_norm": np.abs(diff).max(axis=1) if len(merged) else [],
        "delta_omega_error": (merged["delta_omega_a"] - merged["delta_omega_b"]).abs(),
        "power_angle_error": (merged["power_angle_deg_a"] - merged["power_angle_deg_b"]).abs(),
    })
    logger.info(f"Compared {method_a} and {method_b} on {len(errors)} rows")
    return CompareResult(first=first, second=second, errors=errors)
