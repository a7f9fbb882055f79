"""
Critical clearing time search over the fault duration.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

from tenacity import Retrying, retry_if_exception_type, stop_after_attempt

from ..core.errors import BracketError
from ..integrators import NewtonSettings
from .orchestrator import ScenarioConfig, ScenarioModel, run_three_stage
from .stability import Verdict

logger = logging.getLogger(__name__)

WIDTH_SLACK = 1.0e-9


@dataclass(frozen=True)
class ProbeRecord:
    """Verdict of one break-time probe."""
    t_break: float
    verdict: Verdict
    reason: str
    stage3_duration: float
    retried: bool = False

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["verdict"] = self.verdict.value
        return data


@dataclass
class CCTResult:
    """Final bracket [stable, unstable] and every probe in evaluation order."""
    interval: Tuple[float, float]
    probes: List[ProbeRecord] = field(default_factory=list)

    @property
    def width(self) -> float:
        return self.interval[1] - self.interval[0]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "interval": list(self.interval),
            "width": self.width,
            "probes": [probe.to_dict() for probe in self.probes],
        }


class InconclusiveProbe(BracketError):
    """A probe whose verdict was neither stable nor unstable."""

    def __init__(self, record: ProbeRecord):
        super().__init__(
            f"Probe t_break={record.t_break:g} inconclusive after {record.stage3_duration:g} s: {record.reason}"
        )
        self.record = record


def probe(
    model: ScenarioModel,
    scenario: ScenarioConfig,
    t_break: float,
    newton: NewtonSettings = NewtonSettings()
) -> ProbeRecord:
    """
    Judge one break time; an inconclusive run is repeated once with a doubled
    post-clearing stage.

    Raises:
        InconclusiveProbe: If the repeat is inconclusive too
    """
    durations = [scenario.stage3_duration, 2.0 * scenario.stage3_duration]
    for attempt in Retrying(
        stop=stop_after_attempt(len(durations)),
        retry=retry_if_exception_type(InconclusiveProbe),
        reraise=True,
    ):
        with attempt:
            number = attempt.retry_state.attempt_number
            config = replace(scenario, t_break=t_break, stage3_duration=durations[number - 1])
            result = run_three_stage(config, model, newton)
            record = ProbeRecord(
                t_break=t_break,
                verdict=result.verdict,
                reason=result.report.reason,
                stage3_duration=config.stage3_duration,
                retried=number > 1,
            )
            logger.info(f"CCT probe t_break={t_break:.6g}: {record.verdict.value} ({record.reason})")
            if record.verdict == Verdict.INCONCLUSIVE:
                if number < len(durations):
                    logger.warning(f"Probe t_break={t_break:g} inconclusive; doubling the post-clearing horizon")
                raise InconclusiveProbe(record)
    return record


def _probe_worker(model_doc: Dict[str, Any], scenario_doc: Dict[str, Any], newton_doc: Dict[str, Any], t_break: float):
    model = ScenarioModel.from_document(model_doc)
    return probe(model, ScenarioConfig.from_dict(scenario_doc), t_break, NewtonSettings.from_dict(newton_doc))


def _check_monotone(probes: Sequence[ProbeRecord]):
    conclusive = sorted(
        (p for p in probes if p.verdict != Verdict.INCONCLUSIVE),
        key=lambda p: p.t_break,
    )
    first_unstable = None
    for record in conclusive:
        if record.verdict == Verdict.UNSTABLE and first_unstable is None:
            first_unstable = record
        elif record.verdict == Verdict.STABLE and first_unstable is not None:
            logger.warning(
                f"Non-monotone stability: t_break={first_unstable.t_break:g} unstable "
                f"but t_break={record.t_break:g} stable"
            )


def find_cct(
    model: ScenarioModel,
    scenario: ScenarioConfig,
    bracket: Tuple[float, float],
    tol: float,
    newton: NewtonSettings = NewtonSettings(),
    jobs: int = 1,
    model_doc: Optional[Dict[str, Any]] = None
) -> CCTResult:
    """
    Narrow [stable, unstable] break times until the bracket is at most tol wide.

    With jobs = 1 this is bisection. With jobs > 1 every round probes ``jobs``
    evenly spaced interior points concurrently in a process pool, each worker
    rebuilding the model from ``model_doc``.

    Args:
        model: Prepared scenario model
        scenario: Scenario template; its t_break is replaced per probe
        bracket: (t_lo, t_hi) with t_lo expected stable and t_hi unstable
        tol: Target bracket width (s)
        newton: Stage Newton settings
        jobs: Concurrent probes per round
        model_doc: Model document for worker processes (required when jobs > 1)

    Returns:
        CCTResult: Final interval and the probe log

    Raises:
        BracketError: If the endpoints do not bracket or a probe stays inconclusive
    """
    t_lo, t_hi = float(bracket[0]), float(bracket[1])
    if not 0.0 <= t_lo < t_hi:
        raise BracketError(f"Invalid bracket [{t_lo}, {t_hi}]")
    if not tol > 0:
        raise BracketError("Bracket tolerance must be positive")
    if jobs > 1 and model_doc is None:
        raise BracketError("Parallel CCT search needs the model document")

    probes: List[ProbeRecord] = []
    executor = ProcessPoolExecutor(max_workers=jobs) if jobs > 1 else None

    def evaluate(times: Sequence[float]) -> List[ProbeRecord]:
        if executor is None:
            records = [probe(model, scenario, t, newton) for t in times]
        else:
            futures = [
                executor.submit(_probe_worker, model_doc, scenario.to_dict(), newton.to_dict(), t)
                for t in times
            ]
            records = [future.result() for future in futures]
        probes.extend(records)
        return records

    try:
        low, high = evaluate([t_lo, t_hi])
        if low.verdict != Verdict.STABLE or high.verdict != Verdict.UNSTABLE:
            raise BracketError(
                f"Endpoints do not bracket the CCT: t_break={t_lo:g} is {low.verdict.value}, "
                f"t_break={t_hi:g} is {high.verdict.value}"
            )
        points = max(jobs, 1)
        while t_hi - t_lo > tol * (1.0 + WIDTH_SLACK):
            interior = [t_lo + (t_hi - t_lo) * k / (points + 1) for k in range(1, points + 1)]
            records = evaluate(interior)
            grid = [(t_lo, Verdict.STABLE)] + [(r.t_break, r.verdict) for r in records] + [(t_hi, Verdict.UNSTABLE)]
            split = next(i for i, (_, verdict) in enumerate(grid) if verdict == Verdict.UNSTABLE)
            t_lo, t_hi = grid[split - 1][0], grid[split][0]
            logger.info(f"CCT bracket narrowed to [{t_lo:.6g}, {t_hi:.6g}]")
    finally:
        if executor is not None:
            executor.shutdown()

    _check_monotone(probes)
    logger.info(f"CCT in [{t_lo:.6g}, {t_hi:.6g}] after {len(probes)} probes")
    return CCTResult(interval=(t_lo, t_hi), probes=probes)
