"""
Shared fixtures and the --runslow switch for long-horizon checks.
"""
import os
import sys

import pytest

_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, _ROOT)

from src.config.settings import load_preset  # noqa: E402
from src.core.equilibrium import XYSystem, find_equilibrium  # noqa: E402
from src.core.model import stages_from_document  # noqa: E402
from src.core.reduction import reduce  # noqa: E402
from src.scenario.orchestrator import ScenarioModel  # noqa: E402


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run long-horizon tests")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-horizon simulation, runs only with --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(scope="session")
def benchmark_doc():
    return load_preset("first-benchmark")


@pytest.fixture(scope="session")
def stages(benchmark_doc):
    return stages_from_document(benchmark_doc)


@pytest.fixture(scope="session")
def reduced(stages):
    return {name: reduce(stage) for name, stage in stages.items()}


@pytest.fixture(scope="session")
def stage1_point(stages):
    return find_equilibrium(XYSystem(stages["I"]))


@pytest.fixture(scope="session")
def stage3_point(stages, stage1_point):
    return find_equilibrium(XYSystem(stages["III"]), guess=stage1_point.delta)


@pytest.fixture(scope="session")
def scenario_model(stages):
    return ScenarioModel.build(stages)
