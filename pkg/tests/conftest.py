import numpy as np
import pytest

from bimlab.config import ProblemConfig


@pytest.fixture
def tiny_config():
    """8x8 grid, few transceivers: fast enough for dense oracles."""
    return ProblemConfig(grid_nx=8, grid_ny=8, pixel_size_m=0.15,
                         tx_count=4, rx_count=8, transceiver_radius_m=1.5)


@pytest.fixture
def small_config():
    """16x16 grid for mid-size pipeline checks."""
    return ProblemConfig(grid_nx=16, grid_ny=16, pixel_size_m=0.15,
                         tx_count=8, rx_count=16, transceiver_radius_m=2.5)


def random_contrast(config, seed, max_abs=0.9, fill=0.3):
    """Random complex contrast with |t| <= max_abs on a fraction of pixels."""
    rng = np.random.default_rng(seed)
    n = config.n_pixels
    t = np.zeros(n, dtype=complex)
    mask = rng.random(n) < fill
    mag = rng.uniform(0.0, max_abs, n)
    phase = rng.uniform(0, 2 * np.pi, n)
    t[mask] = (mag * np.exp(1j * phase))[mask]
    return t
