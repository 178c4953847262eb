import numpy as np
import pytest

from solidhhg.config import RunConfig
from solidhhg.interference import Simulation, TrajectoryCache
from solidhhg.units import gvm_to_au

# (criterion number, title, passed, detail), filled by test_acceptance.py
ACCEPTANCE_RESULTS = []


@pytest.fixture(scope="session")
def shared_cache():
    return TrajectoryCache()


@pytest.fixture(scope="session")
def default_config():
    return RunConfig()


@pytest.fixture(scope="session")
def default_sim(default_config, shared_cache):
    """Full-zone default run (0.5 GV/m) with diagnostics from a fresh propagation."""
    sim = Simulation(default_config, workers=2, cache=shared_cache)
    sim.currents(range(sim.kgrid.n_k))
    return sim


@pytest.fixture(scope="session")
def strong_sim(shared_cache):
    sim = Simulation(RunConfig().with_field(gvm_to_au(4.0)), workers=2, cache=shared_cache)
    sim.currents(range(sim.kgrid.n_k))
    return sim


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE_RESULTS, key=lambda r: r[0]):
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {number:2d}. {title}: {detail}")
