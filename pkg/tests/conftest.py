"""Session-scoped runs of the bundled scenarios.

Full runs are deterministic, so each scenario is executed once per session
and shared across every test that inspects its artifacts.
"""

from __future__ import annotations

import pytest

from helpers import bundled_scenario
from ricsim.experiment import run_experiment


@pytest.fixture(scope="session")
def default_on() -> dict:
    return run_experiment(bundled_scenario("default"), cm="on")


@pytest.fixture(scope="session")
def default_off() -> dict:
    return run_experiment(bundled_scenario("default"), cm="off")


@pytest.fixture(scope="session")
def ground_truth_run() -> dict:
    return run_experiment(bundled_scenario("ground_truth"))


@pytest.fixture(scope="session")
def coverage_floor_run() -> dict:
    return run_experiment(bundled_scenario("coverage_floor"))


@pytest.fixture(scope="session")
def pipeline_run() -> dict:
    return run_experiment(bundled_scenario("critical_pipeline"))


@pytest.fixture(scope="session")
def adaptation_run() -> dict:
    return run_experiment(bundled_scenario("adaptation"))
