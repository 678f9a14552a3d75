import sys

import numpy as np
import pytest

from vacuumfront.exact import MONOATOMIC_1D, FlowField, hyperbola_flow, impulsive_flow
from vacuumfront.lagrangian import SimulationConfig, simulate


def burgers_field(t_min=0.0):
    """gamma = 3 flow with r_minus = 0 and r_plus solving Burgers from 2 + tanh(x).

    The data is increasing, so the flow exists for all t >= 0 and the
    plus-invariant has a non-negative x-derivative.
    """
    def f(z):
        return 2.0 + np.tanh(z)

    def state(x, t):
        if t < t_min:
            raise ValueError("synthetic field only exists for t >= t_min")
        # r - f(x - r t) increases in r and changes sign on [1, 3]
        lo = np.full(np.shape(x), 1.0)
        hi = np.full(np.shape(x), 3.0)
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            above = mid - f(x - mid * t) > 0
            hi = np.where(above, mid, hi)
            lo = np.where(above, lo, mid)
        r = 0.5 * (lo + hi)
        # r_plus = u + rho, r_minus = u - rho = 0
        return 0.5 * r, 0.5 * r

    return FlowField(MONOATOMIC_1D, state, None, "burgers")


def uniform_field(rho=1.0, u=0.3):
    return FlowField(MONOATOMIC_1D, lambda x, t: (np.full(np.shape(x), rho), np.full(np.shape(x), u)),
                     None, "uniform")


@pytest.fixture(scope="session")
def hyperbola_run_400():
    cfg = SimulationConfig(MONOATOMIC_1D, hyperbola_flow(), n_cells=400, t_end=3.0, snapshot_stride=0.1)
    return simulate(cfg)


@pytest.fixture(scope="session")
def hyperbola_run_800():
    cfg = SimulationConfig(MONOATOMIC_1D, hyperbola_flow(), n_cells=800, t_end=2.0, snapshot_stride=0.1)
    return simulate(cfg)


@pytest.fixture(scope="session")
def hyperbola_run_long():
    times = tuple(np.linspace(0.0, 16.0, 61))
    cfg = SimulationConfig(MONOATOMIC_1D, hyperbola_flow(), n_cells=400, t_end=16.0, snapshot_times=times)
    return simulate(cfg)


@pytest.fixture(scope="session")
def impulsive_run_400():
    cfg = SimulationConfig(MONOATOMIC_1D, impulsive_flow(), n_cells=400, t_end=2.0, snapshot_stride=0.1)
    return simulate(cfg)


def pytest_terminal_summary(terminalreporter):
    mod = next((m for name, m in sys.modules.items() if name.endswith("test_acceptance")), None)
    lines = getattr(mod, "LINES", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
