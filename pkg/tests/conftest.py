import numpy as np
import pytest

from qkpsim.spectral import Grid2D, RealField2D


@pytest.fixture
def grid():
    return Grid2D(n1=32, n2=16, l1=10.0, l2=5.0)


def band_limited_random(grid, seed=0, max_mode1=None, max_mode2=None, amplitude=1.0):
    """Smooth random field from a fixed low band of Fourier modes.

    Band-limited well inside the 2/3 cutoff so spectral operations on it
    are exact and products stay representable.
    """
    rng = np.random.default_rng(seed)
    if max_mode1 is None:
        max_mode1 = max(1, grid.n1 // 6)
    if max_mode2 is None:
        max_mode2 = max(1, grid.n2 // 6)
    xx1, xx2 = grid.meshgrid()
    values = np.zeros((grid.n1, grid.n2))
    for m1 in range(0, max_mode1 + 1):
        for m2 in range(0, max_mode2 + 1):
            if m1 == 0 and m2 == 0:
                continue
            c = rng.standard_normal()
            s = rng.standard_normal()
            phase = 2 * np.pi * (m1 * xx1 / grid.l1 + m2 * xx2 / grid.l2)
            values += c * np.cos(phase) + s * np.sin(phase)
    values *= amplitude / max(1.0, np.max(np.abs(values)))
    return RealField2D(grid, values)


def mean_free_random(grid, seed=0, amplitude=1.0):
    """Band-limited random field with exactly zero x1-line means."""
    f = band_limited_random(grid, seed=seed, amplitude=amplitude)
    return RealField2D(grid, f.values - f.values.mean(axis=0)[None, :])
