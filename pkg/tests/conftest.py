import numpy as np
import pytest
from hypothesis import settings

from tvmi.series import LogPanel
from tvmi.synth import generate, scenario

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def paperlike_panel():
    panel, zeta = generate(scenario("paperlike", seed=11))
    return panel, zeta


@pytest.fixture(scope="session")
def constant_case():
    sc = scenario("constant", seed=5)
    panel, zeta = generate(sc)
    return sc, panel, zeta


@pytest.fixture
def small_coint(rng):
    """Three series, one relation between the first two, T=300."""
    T = 300
    e = rng.standard_normal((T, 3)) * 0.05
    X = np.zeros((T, 3))
    for t in range(1, T):
        dev = X[t - 1, 0] - X[t - 1, 1] + 0.1
        X[t] = X[t - 1] + np.array([-0.2 * dev, 0.1 * dev, 0.0]) + e[t]
    return LogPanel(("a", "b", "c"), (2000, 1), X)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
