import pytest

from modecheck.campaign import CampaignConfig, profile
from modecheck.runner import Trace


def synthetic_trace(positions, modes, accelerations=None, start=0):
    """Build a Trace straight from rows, bypassing the simulator."""
    tr = Trace()
    tr.start = start
    tr.pos = [tuple(map(float, p)) for p in positions]
    tr.acc = [tuple(map(float, a)) for a in (accelerations or [(0.0, 0.0, 0.0)] * len(positions))]
    tr.vel = [(0.0, 0.0, 0.0)] * len(positions)
    tr.modes = list(modes)
    tr.failures = [()] * len(positions)
    return tr


@pytest.fixture(scope="session")
def box_config():
    return CampaignConfig(workload="box_hold", seed=0)


@pytest.fixture(scope="session")
def fence_config():
    return CampaignConfig(workload="waypoint_fence", seed=0)


@pytest.fixture(scope="session")
def box_profile(box_config):
    return profile(box_config)


@pytest.fixture(scope="session")
def fence_profile(fence_config):
    return profile(fence_config)


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
