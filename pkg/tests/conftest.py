import sys
import functools

import pytest

from riskmpc import sim
from riskmpc.scenario import fixture_names, load_fixture


@functools.lru_cache(maxsize=None)
def fixture_run(name: str):
    """One closed-loop run per fixture, shared by every test module."""
    scenario = load_fixture(name)
    return scenario, sim.run(scenario)


@pytest.fixture(params=fixture_names())
def fixture_name(request):
    return request.param


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
