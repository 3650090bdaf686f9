import pytest

from mirrorsim import RunConfig


@pytest.fixture
def small_cfg():
    """Nine static nodes on a 250 m grid; every orthogonal pair is in range."""
    return RunConfig(sim_time=60.0, terrain=(250.0, 250.0), nodes=9).replace(
        **{"motion.v_max": 0.0, "scenario.flows": 4, "scenario.flow_start": 5.0,
           "scenario.flow_stop": 55.0})


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "VERDICTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
