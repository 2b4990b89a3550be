import numpy as np
import pytest

from sd_spectral.spectral import ComplexField, RealField, make_grid


def gaussian(grid, amplitude=1.0, width_sq=2.0):
    """``amplitude * exp(-|x|^2 / width_sq)`` centred in the box."""
    r2 = sum(x ** 2 for x in grid.centered_coordinates())
    return amplitude * np.exp(-r2 / width_sq)


def random_complex(grid, rng, amplitude=1.0):
    vals = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    return ComplexField(grid, amplitude * vals)


def smooth_random(grid, rng, cutoff_fraction=0.25, amplitude=0.5):
    """Band-limited random field, peak modulus ``amplitude``."""
    spec = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    spec[grid.xi_abs > cutoff_fraction * grid.wavenumbers.max()] = 0
    vals = np.fft.ifftn(spec)
    return ComplexField(grid, amplitude * vals / np.abs(vals).max())


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def grid2d():
    return make_grid(2, 64, 16.0)


@pytest.fixture
def gauss2d(grid2d):
    return ComplexField(grid2d, gaussian(grid2d))


@pytest.fixture
def zero_v(grid2d):
    return RealField.zeros(grid2d)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
