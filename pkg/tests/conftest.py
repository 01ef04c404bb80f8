import numpy as np
import pytest

from risfusion.scenario import build_scenario


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def default_scenario():
    """Default ten-sensor layout with a 64-antenna FC and 25-element RIS."""
    return build_scenario(seed=3, n_antennas=64, design_restarts=2, design_max_iter=200)


def random_unit(rng, m):
    return np.exp(1j * rng.uniform(0, 2 * np.pi, m))



# one summary line per acceptance criterion, filled through the fixture below
ACCEPTANCE_KEY = pytest.StashKey[dict]()


@pytest.fixture(scope="session")
def acceptance(request):
    results = request.config.stash.setdefault(ACCEPTANCE_KEY, {})

    def record(criterion, passed, detail):
        results[str(criterion)] = (bool(passed), detail)
        return bool(passed)

    return record


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(ACCEPTANCE_KEY, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(results):
        passed, detail = results[key]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} criterion {key}: {detail}")
