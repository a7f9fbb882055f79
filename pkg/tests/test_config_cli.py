"""
Settings, run documents and the command-line entry point.
"""
import json
import os

import pandas as pd
import pytest

import main as cli_main
from src.cli import commands
from src.config.settings import (
    RunConfig,
    Settings,
    load_preset,
    load_run_config,
    load_settings,
    resolve_model,
)
from src.core.errors import BracketError, ConfigError

ENV_VARS = ("FTSIM_LOG", "FTSIM_OUT_DIR", "FTSIM_JOBS")


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for name in ENV_VARS:
        monkeypatch.delenv(name, raising=False)


def _write(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


def _short_run_doc(**newton):
    doc = {
        "scenario": {"t_fault": 0.002, "t_break": 0.002, "stage3_duration": 0.002, "h": 1e-4},
        "output": {"decimation": 1},
    }
    if newton:
        doc["newton"] = newton
    return doc


# ── Environment settings ─────────────────────────────────────────────────────

def test_settings_defaults():
    settings = load_settings()
    assert settings == Settings(log_level="INFO", out_dir="outputs", jobs=1)


def test_settings_from_environment(monkeypatch):
    monkeypatch.setenv("FTSIM_LOG", "debug")
    monkeypatch.setenv("FTSIM_OUT_DIR", "/tmp/ftsim")
    monkeypatch.setenv("FTSIM_JOBS", "4")
    assert load_settings() == Settings(log_level="DEBUG", out_dir="/tmp/ftsim", jobs=4)


@pytest.mark.parametrize("name,value", [
    ("FTSIM_LOG", "chatty"),
    ("FTSIM_JOBS", "two"),
    ("FTSIM_JOBS", "0"),
])
def test_settings_reject_bad_values(monkeypatch, name, value):
    monkeypatch.setenv(name, value)
    with pytest.raises(ValueError, match=name):
        load_settings()


# ── Presets and model documents ──────────────────────────────────────────────

def test_preset_has_no_provenance_notes():
    doc = load_preset("first-benchmark")
    assert set(doc) == {"generator", "network", "stages"}
    assert list(doc["stages"]) == ["I", "II", "III"]


def test_unknown_preset():
    with pytest.raises(ConfigError, match="first-benchmark"):
        load_preset("second-benchmark")


def test_resolve_model_merges_overrides():
    doc = resolve_model({"preset": "first-benchmark", "generator": {"U_f": 400.0}})
    assert doc["generator"]["U_f"] == 400.0
    assert doc["generator"]["r_f"] == load_preset("first-benchmark")["generator"]["r_f"]
    assert "preset" not in doc


def test_resolve_model_copies_inline_documents():
    inline = load_preset("first-benchmark")
    resolved = resolve_model(inline)
    assert resolved == inline and resolved is not inline


# ── Run documents ────────────────────────────────────────────────────────────

def test_run_config_defaults():
    config = RunConfig()
    assert config.model == {"preset": "first-benchmark"}
    assert config.scenario.method == "sp-midpoint"
    assert config.cct.bracket == (0.5, 1.0)
    assert config.output.formats == ("csv", "json")


def test_run_config_round_trip():
    config = RunConfig.from_dict({
        "scenario": {"t_break": 0.6, "method": "pc-beta1"},
        "newton": {"max_iter": 10},
        "output": {"decimation": 7, "dump_reduction": True},
        "cct": {"bracket": [0.6, 0.9], "tol": 0.005},
    })
    assert config.scenario.decimation == 7
    assert RunConfig.from_dict(config.to_dict()) == config
    assert config.to_dict()["output"]["decimation"] == 7


@pytest.mark.parametrize("doc", [
    {"simulation": {}},
    {"output": {"formats": ["xlsx"]}},
    {"cct": {"bracket": [1.0, 0.5]}},
    {"cct": {"tol": 0.0}},
    {"newton": {"max_iter": 0}},
    {"scenario": {"method": "rk4"}},
    {"output": {"colour": "red"}},
    [],
])
def test_run_config_rejects_bad_documents(doc):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(doc)


def test_load_run_config_layers(tmp_path):
    path = _write(tmp_path / "run.json", {"scenario": {"t_break": 0.6}, "output": {"decimation": 10}})
    settings = Settings(out_dir="from-env", jobs=2)
    config = load_run_config(path, {"method": "pc-beta1", "h": None, "tol": 0.005}, settings)
    assert config.scenario.t_break == 0.6
    assert config.scenario.decimation == 10
    assert config.scenario.method == "pc-beta1"
    assert config.scenario.h == 1e-4
    assert config.output.out_dir == "from-env"
    assert config.cct.jobs == 2
    assert config.cct.tol == 0.005


def test_load_run_config_overrides_beat_file(tmp_path):
    path = _write(tmp_path / "run.json", {"output": {"out_dir": "from-file"}, "cct": {"jobs": 3}})
    overrides = {"out_dir": "from-cli", "jobs": 4, "bracket": [0.6, 0.9], "dump_reduction": True, "stage3_duration": 2.0}
    config = load_run_config(path, overrides, Settings())
    assert config.output.out_dir == "from-cli"
    assert config.output.dump_reduction
    assert config.cct.jobs == 4
    assert config.cct.bracket == (0.6, 0.9)
    assert config.scenario.stage3_duration == 2.0


def test_load_run_config_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError, match="Malformed JSON"):
        load_run_config(str(bad), settings=Settings())
    with pytest.raises(ConfigError, match="Cannot read"):
        load_run_config(str(tmp_path / "missing.json"), settings=Settings())
    with pytest.raises(ConfigError):
        load_run_config(None, {"h": -1.0}, Settings())


# ── Command line ─────────────────────────────────────────────────────────────

def test_parser_maps_horizon_to_stage_three_duration():
    args = cli_main.build_parser().parse_args(["simulate", "--horizon", "5", "--t-break", "0.7"])
    assert args.stage3_duration == 5.0
    assert args.t_break == 0.7
    assert args.dump_reduction is None


def test_bad_environment_exits_with_config_code(monkeypatch, tmp_path):
    monkeypatch.setenv("FTSIM_LOG", "chatty")
    assert cli_main.main(["equilibrium", "--out-dir", str(tmp_path)]) == commands.EXIT_CONFIG


def test_bad_run_document_exits_with_config_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2")
    assert cli_main.main(["simulate", "--config", str(bad), "--out-dir", str(tmp_path)]) == commands.EXIT_CONFIG


def test_equilibrium_command(tmp_path, capsys):
    assert cli_main.main(["equilibrium", "--out-dir", str(tmp_path)]) == commands.EXIT_OK
    with open(tmp_path / "equilibrium_I_summary.json") as f:
        summary = json.load(f)
    assert summary["psi"][2] == pytest.approx(3.0705, abs=5e-3)
    assert summary["config"]["model"] == {"preset": "first-benchmark"}
    electrical = pd.read_csv(tmp_path / "equilibrium_I_electrical.csv")
    assert list(electrical["component"]) == ["1a", "1b", "2a", "2b", "3a", "3b", "f", "D", "g", "Q"]
    mechanical = pd.read_csv(tmp_path / "equilibrium_I_mechanical.csv")
    assert len(mechanical) == 6
    printed = json.loads(capsys.readouterr().out)
    assert "config" not in printed
    assert printed["stage"] == "I"


def test_equilibrium_command_by_stage_index(tmp_path):
    assert cli_main.main(["equilibrium", "--stage", "3", "--out-dir", str(tmp_path)]) == commands.EXIT_OK
    with open(tmp_path / "equilibrium_III_summary.json") as f:
        summary = json.load(f)
    assert abs(summary["power_angle_deg"] - 47.421) <= 0.02
    assert len(summary["psi"]) == 8


@pytest.mark.parametrize("stage", ["IV", "0", "4"])
def test_equilibrium_command_rejects_unknown_stage(tmp_path, stage):
    assert cli_main.main(["equilibrium", "--stage", stage, "--out-dir", str(tmp_path)]) == commands.EXIT_CONFIG


def test_simulate_command_writes_outputs(tmp_path, capsys):
    path = _write(tmp_path / "run.json", _short_run_doc())
    code = cli_main.main(["simulate", "--config", path, "--out-dir", str(tmp_path), "--dump-reduction"])
    assert code == commands.EXIT_OK
    trajectory = pd.read_csv(tmp_path / "sp-midpoint_trajectory.csv")
    assert len(trajectory) == 63
    with open(tmp_path / "sp-midpoint_summary.json") as f:
        summary = json.load(f)
    assert summary["config"]["scenario"]["t_break"] == 0.002
    assert len(summary["switches"]) == 2
    for name in ("I", "II", "III"):
        for family in ("A0", "N"):
            assert os.path.exists(tmp_path / f"reduction_{name}_{family}_S0.csv")
    assert "verdict" in json.loads(capsys.readouterr().out)


def test_simulate_command_reports_step_failure(tmp_path):
    path = _write(tmp_path / "run.json", _short_run_doc(max_iter=1))
    code = cli_main.main(["simulate", "--config", path, "--out-dir", str(tmp_path)])
    assert code == commands.EXIT_STEP
    trajectory = pd.read_csv(tmp_path / "sp-midpoint_trajectory.csv")
    assert len(trajectory) == 1
    with open(tmp_path / "sp-midpoint_summary.json") as f:
        assert json.load(f)["failure"]


def test_compare_command(tmp_path):
    path = _write(tmp_path / "run.json", _short_run_doc())
    code = cli_main.main(["compare", "--methods", "sp-euler", "pc-beta1", "--config", path, "--out-dir", str(tmp_path)])
    assert code == commands.EXIT_OK
    errors = pd.read_csv(tmp_path / "compare_sp-euler_vs_pc-beta1_errors.csv")
    assert len(errors) == 63
    assert os.path.exists(tmp_path / "compare_sp-euler_trajectory.csv")
    assert os.path.exists(tmp_path / "compare_pc-beta1_trajectory.csv")


def test_cct_command_reports_bracket_failure(monkeypatch, tmp_path):
    def failing(*args, **kwargs):
        raise BracketError("Endpoints do not bracket the CCT")

    monkeypatch.setattr(commands, "find_cct", failing)
    assert cli_main.main(["cct", "--out-dir", str(tmp_path)]) == commands.EXIT_BRACKET


def test_cct_command_writes_probe_log(monkeypatch, tmp_path, capsys):
    from src.scenario.cct import CCTResult, ProbeRecord
    from src.scenario.stability import Verdict

    seen = {}

    def fake(model, scenario, bracket, tol, newton=None, jobs=1, model_doc=None):
        seen.update(bracket=bracket, tol=tol, jobs=jobs)
        probes = [ProbeRecord(0.6, Verdict.STABLE, "settled", 60.0), ProbeRecord(0.9, Verdict.UNSTABLE, "slip", 60.0)]
        return CCTResult(interval=(0.6, 0.9), probes=probes)

    monkeypatch.setattr(commands, "find_cct", fake)
    code = cli_main.main(["cct", "--bracket", "0.6", "0.9", "--tol", "0.5", "--out-dir", str(tmp_path)])
    assert code == commands.EXIT_OK
    assert seen == {"bracket": (0.6, 0.9), "tol": 0.5, "jobs": 1}
    probes = pd.read_csv(tmp_path / "cct_probes.csv")
    assert list(probes["verdict"]) == ["stable", "unstable"]
    with open(tmp_path / "cct_summary.json") as f:
        assert json.load(f)["interval"] == [0.6, 0.9]
    assert "CCT interval: [0.6, 0.9] s" in capsys.readouterr().out
