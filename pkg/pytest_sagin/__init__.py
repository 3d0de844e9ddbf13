import numpy as np
import pytest

from sagin.scenario import Scenario


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "scenario(overrides): Dotted-key overrides applied to the scenario fixture")
    config.addinivalue_line(
        "markers", "montecarlo: Statistical test that draws many samples")


#: Small enough for a test run, large enough for 3σ tolerances to mean something
TEST_TRIALS = 400


@pytest.fixture
def scenario(request) -> Scenario:
    """
    The default scenario with a reduced trial count, plus whatever the
    ``scenario`` marker overrides.
    """
    marker = request.node.get_closest_marker("scenario")
    overrides = {'run.trials': TEST_TRIALS}
    if marker is not None:
        overrides |= marker.args[0]
    return Scenario.from_flat(overrides)


@pytest.fixture
def rng() -> np.random.Generator:
    """
    A generator seeded the same for every test.
    """
    return np.random.default_rng(20230817)
