import numpy as np
import pytest

from tflab.osgood import OsgoodParams, build_ingham
from tflab.packets import PacketBank, TopDatum
from tflab.sampling import DyadicInterval, Grid, GridFunction


@pytest.fixture(scope="session")
def params():
    return OsgoodParams(1.0)


@pytest.fixture(scope="session")
def table(params):
    return build_ingham(params, grid_n=2 ** 12)


@pytest.fixture(scope="session")
def table_fine(params):
    return build_ingham(params, grid_n=2 ** 13)


@pytest.fixture(scope="session")
def grid():
    return Grid(-16.0, 16.0, 2 ** 12)


@pytest.fixture(scope="session")
def grid_fine():
    return Grid(-16.0, 16.0, 2 ** 13)


@pytest.fixture()
def bank(table, grid):
    return PacketBank(table, grid, 0.25)


def bump_signal(rng, grid, n_bumps=5, freq_max=6.0, support=6.0):
    """Random smooth complex signal supported well inside the domain."""
    xs = grid.xs()
    v = np.zeros(grid.n, dtype=complex)
    for _ in range(n_bumps):
        c = rng.uniform(-support / 2, support / 2)
        w = rng.uniform(0.3, 1.8)
        v += (rng.uniform(0.4, 1.6) * np.exp(2j * np.pi * rng.uniform())
              * np.exp(-((xs - c) / w) ** 2)
              * np.exp(2j * np.pi * rng.uniform(-freq_max, freq_max) * xs))
    return GridFunction(grid, v)


def mfcz_case(rng, grid, params):
    """(f, tops, lam) with one dominant bump (a single superlevel component,
    so the Whitney family stays small) and a top datum outside it."""
    from tflab.sampling import maximal_function

    xs = grid.xs()
    xi_top = rng.uniform(1.0, 4.0)
    c0 = rng.uniform(-1.0, 1.0)
    # dominant bump modulated near the top frequency so every case puts
    # comparable energy where the mean-zero lattices live
    v = (1.5 * np.exp(-((xs - c0) / 1.6) ** 2)
         * np.exp(2j * np.pi * (xi_top + rng.uniform(-1.0, 1.0)) * xs))
    for _ in range(2):
        c = c0 + rng.uniform(-1.0, 1.0)
        v += (rng.uniform(0.2, 0.6) * np.exp(2j * np.pi * rng.uniform())
              * np.exp(-((xs - c) / rng.uniform(0.3, 0.8)) ** 2))
    f = GridFunction(grid, v * (np.abs(xs) < 6))
    side = rng.choice([-1.0, 1.0])
    pos = int(8 * side) if side > 0 else -9
    tops = [TopDatum(DyadicInterval(-1, pos), xi_top)]
    mpf = maximal_function(f, 1.0)
    lam = float(np.quantile(mpf.values.real, 0.85))
    return f, tops, lam
