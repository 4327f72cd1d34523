"""Shared fixtures: scenario reports are expensive, so run each once per session."""

import pytest

from superatoms.scenarios import run_scenario


@pytest.fixture(scope="session")
def s1_dark():
    return run_scenario("s1", {"separation": 4})


@pytest.fixture(scope="session")
def s1_bright():
    return run_scenario("s1", {"separation": 2})


@pytest.fixture(scope="session")
def s1_control():
    return run_scenario("s1", {"separation": 4, "single_atom": True})


@pytest.fixture(scope="session")
def s2_transfer():
    return run_scenario("s2", {"detuning_over_j": 0.0})


@pytest.fixture(scope="session")
def s2_swap():
    return run_scenario("s2", {"detuning_over_j": 2.0})


@pytest.fixture(scope="session")
def s3_report():
    return run_scenario("s3", {})


@pytest.fixture(scope="session")
def s4_report():
    return run_scenario("s4", {})


@pytest.fixture(scope="session")
def s5_report():
    return run_scenario("s5", {})


@pytest.fixture(scope="session")
def s6_report():
    return run_scenario("s6", {})


@pytest.fixture(scope="session")
def s7_report():
    return run_scenario("s7", {})
