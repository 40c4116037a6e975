import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fairdyn import AgentSuccess, ClassifierPayoffs, GaussianPair, InterventionSpec, Scenario
from fairdyn.dynamics import DynamicsModel

import oracles

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def gauss():
    return GaussianPair(-1.0, 1.0, 1.0)


def make_scenario(U=oracles.SETTING1_U, V=oracles.SETTING1_V, mu=(0.5, 0.5), tag="group_independent", **spec):
    return Scenario(
        np.array(mu),
        ClassifierPayoffs(V),
        AgentSuccess(U) if U is not None else None,
        GaussianPair(),
        DynamicsModel(),
        InterventionSpec(tag, **spec),
    )


@pytest.fixture
def setting1():
    return make_scenario()


@pytest.fixture
def setting2():
    return make_scenario(oracles.SETTING2_U, oracles.SETTING2_V)


@pytest.fixture
def setting3():
    return make_scenario(oracles.SETTING3_U, oracles.SETTING3_V)


# acceptance summary: one line per criterion at the end of the run

_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    crit = dict(report.user_properties).get("criterion")
    if crit is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        # a parametrized criterion fails if any of its cases fails
        if _ACCEPTANCE.get(crit, ("passed",))[0] == "passed":
            _ACCEPTANCE[crit] = (report.outcome, dict(report.user_properties).get("title", ""))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(_ACCEPTANCE):
        outcome, title = _ACCEPTANCE[crit]
        mark = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {crit:2d}: {mark}  {title}")
