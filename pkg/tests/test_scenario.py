"""
Fault scenarios: stage switching, diagnostics, stability verdicts, method comparison and CCT search.
"""
import logging
import math
from dataclasses import replace
from types import SimpleNamespace

import numpy as np
import pandas as pd
import pytest

from src.core.errors import BracketError, ConfigError, SwitchingError
from src.core.model import stages_from_document
from src.core.reduction import reduce
from src.integrators import NewtonSettings
from src.integrators.base import StopIntegration
from src.scenario import cct
from src.scenario.cct import InconclusiveProbe, ProbeRecord, _check_monotone, find_cct, probe
from src.scenario.diagnostics import PowerAngleTracker, trajectory_columns
from src.scenario.orchestrator import ScenarioConfig, compare, run_three_stage
from src.scenario.stability import StabilityCriteria, StabilityMonitor, Verdict, stability_verdict
from src.scenario.switching import switch_state

SHORT = ScenarioConfig(t_fault=0.002, t_break=0.002, stage3_duration=0.002, h=1e-4, decimation=1)
TARGET = 47.42


@pytest.fixture(scope="module")
def short_run(scenario_model):
    return run_three_stage(SHORT, scenario_model)


def _frame(rows):
    return pd.DataFrame(rows, columns=["t", "stage", "delta_omega", "power_angle_deg"])


def _settled(angle=47.0, delta_omega=0.01, until=10.0):
    return [(t, "III", delta_omega, angle) for t in np.arange(0.0, until + 0.5, 0.5)]


# ── Switching ────────────────────────────────────────────────────────────────

def test_switch_into_fault_stage(stages, reduced, scenario_model):
    state = scenario_model.initial_state()
    result = switch_state(stages["I"], reduced["II"], state)
    full, event = result.full, result.event

    np.testing.assert_array_equal(full.theta, state.theta)
    np.testing.assert_array_equal(full.theta_dot, state.theta_dot)
    np.testing.assert_array_equal(full.psi[:2], state.psi[:2])
    np.testing.assert_array_equal(full.psi[4:], state.psi[6:])
    assert event.continuity_error == 0.0
    assert event.relative_residual <= 1e-9
    assert (event.from_stage, event.to_stage) == ("I", "II")
    assert full.stage == "II" and not full.reduced
    assert result.reduced.reduced and len(result.reduced.psi) == 6


def test_switch_rebuilds_consistent_voltages(stages, reduced, scenario_model):
    result = switch_state(stages["I"], reduced["II"], scenario_model.initial_state())
    stage = stages["II"]
    full = result.full
    balance = stage.kr * full.psi_dot + stage.n_matrix(full.theta[4]) @ full.psi - stage.source(full.t)
    l2 = list(stage.partition.lambda2)
    assert np.abs(balance[l2]).max() <= 1e-9 * np.abs(stage.source(full.t)).max()


def test_switch_into_post_clearing_stage(stages, reduced, scenario_model):
    into_fault = switch_state(stages["I"], reduced["II"], scenario_model.initial_state())
    result = switch_state(stages["II"], reduced["III"], into_fault.full)
    assert result.event.continuity_error == 0.0
    assert result.event.relative_residual <= 1e-9
    np.testing.assert_array_equal(result.full.psi[:2], into_fault.full.psi[:2])


def test_switch_rejects_reduced_state(stages, reduced, scenario_model):
    state = scenario_model.initial_state()
    reduced_state = replace(state, psi=reduced["I"].restrict(state.psi), reduced=True)
    with pytest.raises(SwitchingError, match="full stage coordinates"):
        switch_state(stages["I"], reduced["II"], reduced_state)


def test_switch_rejects_different_networks(stages, benchmark_doc, scenario_model):
    doc = {
        "generator": benchmark_doc["generator"],
        "network": {**benchmark_doc["network"], "n": 2},
        "stages": {"two": {"branches": [[1, 2, 4e-4]], "r_ground": [5e-4, "inf"]}},
    }
    two_node = reduce(stages_from_document(doc)["two"])
    with pytest.raises(SwitchingError, match="different node counts"):
        switch_state(stages["I"], two_node, scenario_model.initial_state())


def test_reduced_torque_equals_full_torque(stages, reduced):
    rng = np.random.default_rng(13)
    for name in ("I", "II", "III"):
        stage, system = stages[name], reduced[name]
        for theta in rng.uniform(-math.pi, math.pi, 5):
            x = 100.0 * rng.normal(size=system.dim)
            psi = system.lift(theta, x)
            full = 0.5 * psi @ stage.d_gamma(theta) @ psi
            assert system.electromagnetic_torque(theta, x) == pytest.approx(full, rel=1e-8, abs=1e-6)


# ── Three-stage runs ─────────────────────────────────────────────────────────

def test_short_run_layout(short_run):
    trajectory = short_run.trajectory
    assert list(trajectory.columns) == trajectory_columns(3)
    assert len(trajectory) == 63
    assert list(trajectory["stage"].unique()) == ["I", "II", "III"]
    assert trajectory["t"].iloc[0] == 0.0
    assert trajectory["t"].iloc[-1] == pytest.approx(0.006)
    assert len(short_run.switches) == 2
    assert short_run.switch_times == pytest.approx((0.002, 0.004))
    assert short_run.failure is None and short_run.stopped is None
    assert short_run.stats.steps == 60
    assert short_run.stats.dirac_violations == 0


def test_short_run_zeroes_shorted_node(short_run):
    fault = short_run.trajectory[short_run.trajectory["stage"] == "II"]
    assert (fault[["psi_2a", "psi_2b"]].to_numpy() == 0.0).all()
    assert np.isfinite(short_run.trajectory["hamiltonian"]).all()


def test_short_run_starts_on_operating_point(short_run, scenario_model):
    first = short_run.trajectory.iloc[0]
    assert first["delta_omega"] == 0.0
    assert first["power_angle_deg"] == pytest.approx(scenario_model.initial.power_angle_deg, abs=1e-9)
    assert first["torque_em"] == pytest.approx(scenario_model.stages["I"].generator.T0, rel=1e-6)


def test_short_run_summary(short_run, scenario_model):
    summary = short_run.summary(scenario_model)
    assert summary["method"] == "sp-midpoint"
    assert [s["to"] for s in summary["switches"]] == ["II", "III"]
    assert set(summary["equilibria"]) == {"I", "III"}
    assert summary["verdict"]["verdict"] in {v.value for v in Verdict}


def test_zero_break_time_skips_fault_stage(scenario_model):
    result = run_three_stage(replace(SHORT, t_break=0.0), scenario_model)
    assert len(result.switches) == 1
    assert result.switches[0].to_stage == "III"
    assert list(result.trajectory["stage"].unique()) == ["I", "III"]
    assert result.switch_times == pytest.approx((0.002, 0.002))


def test_runs_are_deterministic(short_run, scenario_model):
    again = run_three_stage(SHORT, scenario_model)
    pd.testing.assert_frame_equal(again.trajectory, short_run.trajectory)


def test_step_failure_keeps_partial_trajectory(scenario_model):
    result = run_three_stage(SHORT, scenario_model, NewtonSettings(max_iter=1))
    assert result.failure is not None
    assert len(result.trajectory) == 1
    assert result.verdict == Verdict.INCONCLUSIVE


def test_compare_methods(scenario_model):
    result = compare(SHORT, scenario_model, "sp-midpoint", "pc-beta0.5")
    errors = result.errors
    assert list(errors.columns) == ["t", "stage", "error_norm", "delta_omega_error", "power_angle_error"]
    assert len(errors) == 63
    scale = np.abs(result.first.trajectory.filter(like="psi_").to_numpy()).max()
    assert errors["error_norm"].iloc[0] <= 1e-6 * scale
    assert np.isfinite(errors["error_norm"]).all()
    assert result.second.config.method == "pc-beta0.5"


# ── Diagnostics ──────────────────────────────────────────────────────────────

def test_power_angle_tracker_unwraps():
    tracker = PowerAngleTracker()
    assert tracker.update(170.0) == 170.0
    assert tracker.update(-170.0) == pytest.approx(190.0)
    assert tracker.update(-150.0) == pytest.approx(210.0)
    assert tracker.update(170.0) == pytest.approx(170.0)
    assert tracker.max_jump == pytest.approx(40.0)


def test_trajectory_columns():
    columns = trajectory_columns(3)
    assert columns[:5] == ["t", "stage", "delta_omega", "torque_em", "power_angle_deg"]
    assert columns[5] == "psi_1a" and columns[14] == "psi_Q"
    assert columns[-1] == "hamiltonian"
    assert len(columns) == 22


# ── Verdicts ─────────────────────────────────────────────────────────────────

def test_settled_run_is_stable():
    report = stability_verdict(_frame(_settled()), StabilityCriteria(), TARGET)
    assert report.verdict == Verdict.STABLE
    assert report.window_mean_abs_delta_omega == pytest.approx(0.01)


def test_speed_excursion_is_unstable():
    rows = [(0.0, "I", 0.0, 45.0), (0.5, "II", 60.0, 80.0)] + _settled()
    assert stability_verdict(_frame(rows), StabilityCriteria(), TARGET).verdict == Verdict.UNSTABLE


def test_pole_slip_counts_only_after_clearing():
    fault_slip = [(0.0, "II", 1.0, -150.0)] + _settled()
    assert stability_verdict(_frame(fault_slip), StabilityCriteria(), TARGET).verdict == Verdict.STABLE
    post_slip = _settled()[:3] + [(2.0, "III", 1.0, -150.0)] + _settled()[5:]
    assert stability_verdict(_frame(post_slip), StabilityCriteria(), TARGET).verdict == Verdict.UNSTABLE


def test_unsettled_run_is_inconclusive():
    report = stability_verdict(_frame(_settled(delta_omega=1.0)), StabilityCriteria(), TARGET)
    assert report.verdict == Verdict.INCONCLUSIVE
    far = stability_verdict(_frame(_settled(angle=30.0)), StabilityCriteria(), TARGET)
    assert far.verdict == Verdict.INCONCLUSIVE


def test_aborted_and_empty_runs_are_inconclusive():
    assert stability_verdict(_frame(_settled()), StabilityCriteria(), TARGET, aborted=True).verdict == Verdict.INCONCLUSIVE
    assert stability_verdict(_frame([]), StabilityCriteria(), TARGET).verdict == Verdict.INCONCLUSIVE
    early = [(0.0, "I", 0.0, 45.0), (0.1, "II", 0.2, 46.0)]
    report = stability_verdict(_frame(early), StabilityCriteria(), TARGET)
    assert report.verdict == Verdict.INCONCLUSIVE
    assert "never reached" in report.reason


def test_explicit_angle_target_wins():
    criteria = StabilityCriteria(angle_target=30.0)
    report = stability_verdict(_frame(_settled(angle=30.0)), criteria, TARGET)
    assert report.verdict == Verdict.STABLE
    assert report.angle_target == 30.0
    with pytest.raises(ConfigError):
        stability_verdict(_frame(_settled()), StabilityCriteria(), None)


def test_window_covers_only_the_tail():
    rows = _settled(delta_omega=3.0, until=20.0)
    rows = [(t, s, 0.0 if t >= 15.0 else w, a) for t, s, w, a in rows]
    report = stability_verdict(_frame(rows), StabilityCriteria(), TARGET)
    assert report.verdict == Verdict.STABLE
    assert report.max_abs_delta_omega == 3.0


def test_monitor_stops_unstable_runs():
    monitor = StabilityMonitor(StabilityCriteria(), TARGET, "III")
    monitor.check("I", 10.0, -120.0)
    with pytest.raises(StopIntegration, match="exceeds"):
        monitor.check("II", -51.0, 47.0)
    with pytest.raises(StopIntegration, match="pole slip"):
        monitor.check("III", 1.0, -140.0)
    quiet = StabilityMonitor(StabilityCriteria(stop_on_unstable=False), TARGET, "III")
    quiet.check("III", 100.0, -400.0)


# ── Configuration ────────────────────────────────────────────────────────────

@pytest.mark.parametrize("changes", [
    {"omega_tol": 0.0},
    {"angle_window": -1.0},
    {"pole_slip_limit": 0.0},
])
def test_criteria_validation(changes):
    with pytest.raises(ConfigError):
        StabilityCriteria(**changes)


def test_criteria_reject_unknown_fields():
    with pytest.raises(ConfigError, match="Unknown stability criteria"):
        StabilityCriteria.from_dict({"omega_tolerance": 1.0})


@pytest.mark.parametrize("changes", [
    {"t_fault": 0.0},
    {"t_break": -0.1},
    {"stage3_duration": 0.0},
    {"h": -1e-4},
    {"decimation": 0},
    {"method": "rk4"},
])
def test_scenario_validation(changes):
    with pytest.raises(ConfigError):
        ScenarioConfig(**changes)


def test_scenario_from_dict_with_horizon():
    config = ScenarioConfig.from_dict({"t_fault": 0.1, "t_break": 0.5, "t_horizon": 10.0, "stability": {"omega_tol": 0.2}})
    assert config.stage3_duration == pytest.approx(9.4)
    assert config.t_horizon == pytest.approx(10.0)
    assert config.stability.omega_tol == 0.2
    with pytest.raises(ConfigError, match="Unknown scenario fields"):
        ScenarioConfig.from_dict({"t_end": 3.0})


def test_scenario_round_trip():
    config = ScenarioConfig(t_break=0.77, method="pc-beta1")
    assert ScenarioConfig.from_dict(config.to_dict()) == config


def test_switch_steps_snap_to_grid():
    config = ScenarioConfig(t_fault=0.10004, t_break=0.77, stage3_duration=1.0, h=1e-4)
    assert config.switch_steps() == (1000, 8700, 18700)


# ── CCT search ───────────────────────────────────────────────────────────────

def _threshold_probe(cct_value):
    calls = []

    def fake(model, scenario, t_break, newton=None):
        calls.append(t_break)
        verdict = Verdict.STABLE if t_break < cct_value else Verdict.UNSTABLE
        return ProbeRecord(t_break=t_break, verdict=verdict, reason="threshold", stage3_duration=scenario.stage3_duration)

    return fake, calls


def test_bisection_narrows_to_tolerance(monkeypatch):
    fake, calls = _threshold_probe(0.773)
    monkeypatch.setattr(cct, "probe", fake)
    result = find_cct(None, ScenarioConfig(), (0.5, 1.0), 0.01)
    assert len(calls) == 8
    assert result.interval[0] <= 0.773 < result.interval[1]
    assert result.width <= 0.01 * (1 + 1e-9)
    assert [p.t_break for p in result.probes] == calls
    assert result.to_dict()["probes"][0]["verdict"] == "stable"


def test_narrow_bracket_needs_no_interior_probe(monkeypatch):
    fake, calls = _threshold_probe(0.773)
    monkeypatch.setattr(cct, "probe", fake)
    result = find_cct(None, ScenarioConfig(), (0.77, 0.78), 0.01)
    assert calls == [0.77, 0.78]
    assert result.interval == (0.77, 0.78)


def test_bracket_must_straddle(monkeypatch):
    fake, _ = _threshold_probe(2.0)
    monkeypatch.setattr(cct, "probe", fake)
    with pytest.raises(BracketError, match="do not bracket"):
        find_cct(None, ScenarioConfig(), (0.5, 1.0), 0.01)


@pytest.mark.parametrize("bracket,tol,jobs", [((1.0, 0.5), 0.01, 1), ((-0.1, 0.5), 0.01, 1), ((0.5, 1.0), 0.0, 1), ((0.5, 1.0), 0.01, 2)])
def test_invalid_search_arguments(bracket, tol, jobs):
    with pytest.raises(BracketError):
        find_cct(None, ScenarioConfig(), bracket, tol, jobs=jobs)


def _scripted_run(verdicts):
    calls = []

    def fake(config, model, newton=None):
        calls.append(config)
        verdict = verdicts[len(calls) - 1]
        return SimpleNamespace(verdict=verdict, report=SimpleNamespace(reason=verdict.value))

    return fake, calls


def test_probe_retries_inconclusive_with_longer_horizon(monkeypatch):
    fake, calls = _scripted_run([Verdict.INCONCLUSIVE, Verdict.STABLE])
    monkeypatch.setattr(cct, "run_three_stage", fake)
    record = probe(None, ScenarioConfig(stage3_duration=30.0), 0.6)
    assert record.verdict == Verdict.STABLE
    assert record.retried
    assert record.stage3_duration == 60.0
    assert [c.stage3_duration for c in calls] == [30.0, 60.0]
    assert all(c.t_break == 0.6 for c in calls)


def test_probe_gives_up_after_second_inconclusive(monkeypatch):
    fake, calls = _scripted_run([Verdict.INCONCLUSIVE, Verdict.INCONCLUSIVE])
    monkeypatch.setattr(cct, "run_three_stage", fake)
    with pytest.raises(InconclusiveProbe) as info:
        probe(None, ScenarioConfig(stage3_duration=30.0), 0.6)
    assert info.value.record.stage3_duration == 60.0
    assert len(calls) == 2


def test_non_monotone_verdicts_are_logged(caplog):
    records = [
        ProbeRecord(0.5, Verdict.STABLE, "", 60.0),
        ProbeRecord(0.6, Verdict.UNSTABLE, "", 60.0),
        ProbeRecord(0.7, Verdict.STABLE, "", 60.0),
    ]
    with caplog.at_level(logging.WARNING, logger="src.scenario.cct"):
        _check_monotone(records)
    assert "Non-monotone" in caplog.text


# ── Full-length scenarios ────────────────────────────────────────────────────

@pytest.mark.slow
def test_half_second_fault_restabilizes(scenario_model):
    result = run_three_stage(ScenarioConfig(t_break=0.5), scenario_model)
    assert result.verdict == Verdict.STABLE
    tail = result.trajectory[result.trajectory["t"] >= 50.0]
    assert np.abs(tail["delta_omega"]).mean() <= 0.5
    assert abs(tail["power_angle_deg"].mean() - 47.421) <= 5.0


@pytest.mark.slow
@pytest.mark.parametrize("t_break,verdict", [
    (0.77, Verdict.STABLE),
    (0.78, Verdict.UNSTABLE),
    (0.9, Verdict.UNSTABLE),
])
def test_verdict_around_critical_clearing_time(scenario_model, t_break, verdict):
    result = run_three_stage(ScenarioConfig(t_break=t_break), scenario_model)
    assert list(result.trajectory["stage"].unique()) == ["I", "II", "III"]
    assert [round(t, 9) for t in result.switch_times] == [0.1, round(0.1 + t_break, 9)]
    assert result.verdict == verdict


@pytest.mark.slow
def test_critical_clearing_time(scenario_model):
    result = find_cct(scenario_model, ScenarioConfig(), (0.5, 1.0), 0.02)
    assert 0.72 <= result.interval[0] and result.interval[1] <= 0.82
