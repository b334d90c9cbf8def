import numpy as np
import pytest

from mflab.phasespace import Grid1D, PhaseSpaceField, PhaseSpaceGrid
from mflab.quantize import resonant_grid, weyl_quantize


HBAR = 0.1


def gaussian_provider(sx=1.0, sxi=1.0, cx=0.0, cxi=0.0):
    norm = 1.0 / (2.0 * np.pi * sx * sxi)

    def f(u, xi):
        return norm * np.exp(-((u - cx) ** 2) / (2 * sx**2) - ((xi - cxi) ** 2) / (2 * sxi**2))

    return f


def field_from(provider, grid):
    return PhaseSpaceField(grid, provider(grid.axis_points(0), grid.axis_points(1)))


@pytest.fixture(scope="session")
def grid():
    return resonant_grid(12.0, HBAR)


@pytest.fixture(scope="session")
def gaussian_field(grid):
    return field_from(gaussian_provider(), grid)


@pytest.fixture(scope="session")
def gaussian_state(gaussian_field):
    return weyl_quantize(gaussian_field, HBAR, midpoint_source=gaussian_provider())


@pytest.fixture(scope="session")
def coherent_state(grid):
    prov = lambda u, xi: np.exp(-(u**2 + xi**2) / HBAR) / (np.pi * HBAR)
    f = field_from(prov, grid)
    return weyl_quantize(f, HBAR, midpoint_source=prov)


def random_hermitian(rng, n):
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (A + A.conj().T) / 2


def random_psd(rng, n):
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return A @ A.conj().T / n
