"""Shared fixtures.  Full-scenario runs are session-scoped and only built
when a test asks for them."""

import json
from pathlib import Path

import pytest

from leo_ndn_sim.constellation import NS, GroundSite, ShellConfig, access_schedule
from leo_ndn_sim.harness import experiments, scenario

GOLDEN = json.loads((Path(__file__).parent / "oracles" / "golden.json").read_text())

# Long enough for the large-H run to see at least 40 producer handovers.
LONG_DURATION = 11_000.0
# Extra H values run at a lower rate; loss classification does not depend on it.
SWEEP_RATE = 20.0


@pytest.fixture(scope="session")
def golden():
    return GOLDEN


@pytest.fixture(scope="session")
def shell():
    return ShellConfig()


@pytest.fixture(scope="session")
def producer_site():
    return GroundSite.at(scenario.PRODUCER_LAT, scenario.PRODUCER_LON, ("sat",), 25.0)


@pytest.fixture(scope="session")
def producer_schedule(producer_site, shell):
    return access_schedule(producer_site, shell, 10_000 * NS)


@pytest.fixture(scope="session")
def long_scenario():
    return scenario.default_scenario(duration=LONG_DURATION)


@pytest.fixture(scope="session")
def long_schedules(long_scenario):
    return experiments.schedules_for(long_scenario)


def _light(result):
    # The node graph holds every content store; keep only the records.
    result.network = None
    return result


@pytest.fixture(scope="session")
def run_h0():
    sc = scenario.default_scenario().with_H(0.0)
    return _light(experiments.run_scenario(sc))


@pytest.fixture(scope="session")
def run_h1(long_scenario, long_schedules):
    return _light(experiments.run_scenario(long_scenario.with_H(1.0), schedules=long_schedules))


@pytest.fixture(scope="session")
def sweep_runs(long_scenario, long_schedules):
    sc = long_scenario.override(traffic={"rate": SWEEP_RATE})
    return {h: experiments.run_scenario(sc.with_H(h), schedules=long_schedules).summary
            for h in (0.1, 0.25, 0.5, 2.0)}


@pytest.fixture(scope="session")
def consumer_trace_result():
    return experiments.consumer_trace(scenario.default_scenario(), rate=1000.0)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def check(number: int, title: str, ok: bool, detail: str) -> None:
        line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {title} ({detail})"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return check


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
