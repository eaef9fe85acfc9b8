import numpy as np
import pytest

from vpkit.grid import DistributionField, PhaseGrid, SimParams
from vpkit.initial_data import InitialDataSpec, generate_initial_data


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def grid1():
    return PhaseGrid(1, 32, 64, 2 * np.pi, 8.0)


@pytest.fixture
def grid2():
    return PhaseGrid(2, 16, 16, 2 * np.pi, 8.0)


def random_field(grid, rng):
    return DistributionField(grid, rng.standard_normal(grid.shape))


def smooth_data(grid, family="maxwellian_bump", q0=6.0, **kw):
    return generate_initial_data(InitialDataSpec(family=family, q0=q0, **kw), grid)


def band_limited(grid, rng, kmax=3, q0=None):
    """Random real field with x-modes |k| <= kmax and a smooth compact v-profile."""
    n = grid.n
    coef = np.zeros(grid.x_shape, dtype=complex)
    idx = (slice(0, kmax + 1),) * n
    coef[idx] = rng.standard_normal(coef[idx].shape) + 1j * rng.standard_normal(coef[idx].shape)
    a = np.fft.ifftn(coef).real
    a /= np.abs(a).max()
    speed = grid.speed()
    b = np.exp(-speed**2)
    return DistributionField(grid, np.multiply.outer(1.0 + 0.5 * a, b))


@pytest.fixture
def smooth_params():
    return SimParams(sigma=1, s=1.0, t_final=0.25, dt=1.0 / 64)


# acceptance results, filled by test_acceptance and echoed after the run
ACCEPTANCE = {}


def record_criterion(key, name, passed, measured, limit, detail=""):
    line = f"{'PASS' if passed else 'FAIL'} [{key:02d}] {name}: measured={measured:.3e} limit={limit:.3e}"
    if detail:
        line += f" ({detail})"
    ACCEPTANCE[key] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.write_sep("=", "acceptance criteria")
        for key in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[key])
