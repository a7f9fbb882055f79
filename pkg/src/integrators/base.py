"""
Base integrator with the fixed-step loop, observers and run statistics.
"""
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass
from typing import Callable, Iterable, Optional

from ..core.errors import StepFailure
from ..core.state import SystemState

logger = logging.getLogger(__name__)

Observer = Callable[[SystemState], None]


class StopIntegration(Exception):
    """Raised by an observer to end a run early; the message becomes the stop reason."""


@dataclass
class IntegrationStats:
    """Counters collected over one or more integration runs."""
    steps: int = 0
    newton_iterations: int = 0
    max_newton_iterations: int = 0
    max_dirac_residual: float = 0.0
    dirac_violations: int = 0
    halvings: int = 0

    def record_newton(self, iterations: int):
        self.newton_iterations += iterations
        self.max_newton_iterations = max(self.max_newton_iterations, iterations)

    def record_dirac(self, residual: float, bound: float):
        self.max_dirac_residual = max(self.max_dirac_residual, residual)
        if residual > bound:
            self.dirac_violations += 1
            logger.warning(f"Dirac residual {residual:.3e} exceeds bound {bound:.3e}")

    def merge(self, other: "IntegrationStats"):
        self.steps += other.steps
        self.newton_iterations += other.newton_iterations
        self.max_newton_iterations = max(self.max_newton_iterations, other.max_newton_iterations)
        self.max_dirac_residual = max(self.max_dirac_residual, other.max_dirac_residual)
        self.dirac_violations += other.dirac_violations
        self.halvings += other.halvings

    @property
    def mean_newton_iterations(self) -> float:
        return self.newton_iterations / self.steps if self.steps else 0.0

    def to_dict(self) -> dict:
        data = asdict(self)
        data["mean_newton_iterations"] = self.mean_newton_iterations
        return data


@dataclass
class IntegrationResult:
    """
    Final state of a run plus its statistics.

    ``failure`` is set when a step aborted the run and ``stopped`` when an
    observer ended it early.
    """
    final_state: SystemState
    stats: IntegrationStats
    failure: Optional[StepFailure] = None
    stopped: Optional[str] = None

    @property
    def completed(self) -> bool:
        return self.failure is None


class BaseIntegrator(ABC):
    """
    Fixed-step time integrator.

    Args:
        h: Step size (s)
        name: Method name used in logs and reports
    """
    reduced: bool = False

    def __init__(self, h: float, name: str):
        if not h > 0:
            raise ValueError(f"Step size must be positive, got {h}")
        self.h = h
        self.name = name
        self.stats = IntegrationStats()

    @property
    @abstractmethod
    def electrical_dim(self) -> int:
        """Length of the flux vector the integrator works on."""

    @abstractmethod
    def step(self, state: SystemState) -> SystemState:
        """Advance ``state`` by one step of size h."""

    def energy(self, state: SystemState) -> float:
        return math.nan

    def reset(self):
        self.stats = IntegrationStats()

    def integrate(
        self,
        state: SystemState,
        t_end: float,
        observers: Iterable[Observer] = (),
        decimation: int = 1,
        emit_initial: bool = True
    ) -> IntegrationResult:
        """
        Run fixed steps from ``state.t`` to ``t_end``.

        Times are kept on the grid t₀ + k·h. Observers see the initial state
        (unless ``emit_initial`` is False), every ``decimation``-th state and
        the final state.

        Args:
            state: Initial state
            t_end: End time; rounded to the nearest grid point
            observers: Callables receiving emitted states
            decimation: Emit every n-th step (≥ 1)
            emit_initial: Whether the initial state is emitted

        Returns:
            IntegrationResult: Last good state, statistics and failure if any
        """
        if decimation < 1:
            raise ValueError("Decimation must be at least 1")
        n_steps = int(round((t_end - state.t) / self.h))
        if n_steps < 0:
            raise ValueError(f"t_end={t_end} lies before t0={state.t}")
        observers = list(observers)
        t0 = state.t

        def emit(current: SystemState) -> Optional[str]:
            try:
                for observer in observers:
                    observer(current)
            except StopIntegration as stop:
                logger.info(f"{self.name}: stopped at t={current.t:.4f}: {stop}")
                return str(stop)
            return None

        stopped = emit(state) if emit_initial else None
        logger.debug(f"{self.name}: {n_steps} steps of h={self.h:g} from t={t0:g}")
        for k in range(1, n_steps + 1):
            if stopped:
                break
            try:
                state = self.step(state).with_time(t0 + k * self.h)
            except StepFailure as failure:
                logger.error(f"Integration aborted: {failure}")
                return IntegrationResult(final_state=state, stats=self.stats, failure=failure)
            self.stats.steps += 1
            if k % decimation == 0 or k == n_steps:
                stopped = emit(state)
        return IntegrationResult(final_state=state, stats=self.stats, stopped=stopped)
