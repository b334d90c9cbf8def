import math

import numpy as np
import pytest

from mflab.errors import ResolutionError
from mflab.phasespace import (
    Grid1D,
    PhaseSpaceField,
    PhaseSpaceGrid,
    WeightSpec,
    load_field,
    lorentz_norm,
    phase_norms,
    save_field,
    spatial_density,
    weighted_sobolev_norm,
)

from conftest import field_from, gaussian_provider


def small_grid(n=64, L=12.0):
    return PhaseSpaceGrid(Grid1D(n, L), Grid1D(n, L), dim=1)


def test_grid_requires_power_of_two():
    with pytest.raises(ValueError):
        Grid1D(100, 1.0)


def test_grid_spacing_times_n_is_length():
    g = Grid1D(128, 7.5)
    assert g.spacing * g.n_points == pytest.approx(7.5, rel=1e-15)


# ---------------------------------------------------------------------------
# spatial_density
# ---------------------------------------------------------------------------

def test_density_of_zero_field():
    g = small_grid()
    f = PhaseSpaceField(g, np.zeros(g.shape))
    assert np.all(spatial_density(f) == 0.0)


def test_density_gaussian_against_refined_quadrature():
    # peak value of the x-marginal checked against a 4x-refined xi quadrature
    g = small_grid(n=64)
    fine = PhaseSpaceGrid(g.x, Grid1D(4 * g.xi.n_points, g.xi.length), dim=1)
    prov = gaussian_provider()
    rho = spatial_density(field_from(prov, g))
    rho_fine = spatial_density(field_from(prov, fine))
    i_peak = np.argmax(rho)
    assert rho[i_peak] == pytest.approx(rho_fine[i_peak], rel=1e-6)
    # mass matches the phase-space mass to machine precision
    f = field_from(prov, g)
    assert rho.sum() * g.x.spacing == pytest.approx(f.mass, rel=1e-13)


def test_density_separable_scaling():
    g = small_grid()
    gx = np.exp(-g.x.points ** 2)
    hxi = np.exp(-np.abs(g.xi.points))
    f = PhaseSpaceField(g, np.outer(gx, hxi))
    scale = hxi.sum() * g.xi.spacing
    assert np.allclose(spatial_density(f), scale * gx, rtol=1e-13)


def test_density_commutes_with_scaling():
    g = small_grid()
    f = field_from(gaussian_provider(), g)
    # power-of-two scaling is exact in floating point
    assert np.array_equal(spatial_density(f.with_values(2.0 * f.values)), 2.0 * spatial_density(f))
    got = spatial_density(f.with_values(3.0 * f.values))
    assert np.allclose(got, 3.0 * spatial_density(f), rtol=1e-15, atol=0.0)


# ---------------------------------------------------------------------------
# weighted_sobolev_norm
# ---------------------------------------------------------------------------

def test_sobolev_zero_field():
    g = small_grid()
    f = PhaseSpaceField(g, np.zeros(g.shape))
    for spec in (WeightSpec(), WeightSpec(2, 3.0, 1.0), WeightSpec(1, 0.0, math.inf)):
        assert weighted_sobolev_norm(f, spec) == 0.0


def test_sobolev_plain_l2_gaussian():
    # unit-mass gaussian with variance 1 in both coordinates: ||f||_L2 = (4 pi)^{-1/2}
    g = small_grid(n=128, L=16.0)
    f = field_from(gaussian_provider(), g)
    val = weighted_sobolev_norm(f, WeightSpec(0, 0.0, 2.0))
    assert val == pytest.approx((4 * math.pi) ** -0.5, abs=1e-8)


def test_sobolev_first_derivative_analytic():
    g = small_grid(n=64)
    L = g.x.length
    chi = np.exp(-g.xi.points ** 2)
    f = PhaseSpaceField(g, np.sin(2 * np.pi * g.x.points / L)[:, None] * chi[None, :])
    val = weighted_sobolev_norm(f, WeightSpec(1, 0.0, 2.0))
    # analytic gradient magnitude
    k = 2 * np.pi / L
    fx = k * np.cos(k * g.x.points)[:, None] * chi[None, :]
    fxi = np.sin(k * g.x.points)[:, None] * (-2 * g.xi.points * chi)[None, :]
    mag = np.sqrt(fx**2 + fxi**2)
    cell = g.cell_volume
    expected = np.sqrt((f.values**2).sum() * cell) + np.sqrt((mag**2).sum() * cell)
    assert val == pytest.approx(expected, rel=1e-10)


def test_sobolev_lower_bound_by_lp():
    g = small_grid()
    f = field_from(gaussian_provider(), g)
    for sigma in (0, 1, 2):
        for k in (0.0, 1.0, 3.0):
            for p in (1.0, 2.0, math.inf):
                norm = weighted_sobolev_norm(f, WeightSpec(sigma, k, p))
                lp = phase_norms(f, [p])[p]
                assert norm >= lp - 1e-12


def test_sobolev_monotone_in_k_and_sigma():
    # oscillatory band-limited field: each derivative order gains the carrier wavenumber
    g = small_grid(n=128, L=16.0)
    prov = gaussian_provider()
    carrier = np.cos(2.0 * g.axis_points(0)) * np.cos(2.0 * g.axis_points(1))
    f = PhaseSpaceField(g, prov(g.axis_points(0), g.axis_points(1)) * (1.0 + 0.5 * carrier))
    vals_k = [weighted_sobolev_norm(f, WeightSpec(0, k, 2.0)) for k in (0.0, 0.5, 1.0, 2.0)]
    assert all(b >= a - 1e-12 for a, b in zip(vals_k, vals_k[1:]))
    vals_s = [weighted_sobolev_norm(f, WeightSpec(s, 0.0, 2.0)) for s in (0, 1, 2, 3)]
    assert all(b >= a - 1e-10 for a, b in zip(vals_s, vals_s[1:]))


def test_sobolev_resolution_guard():
    g = small_grid(n=64)
    rng = np.random.default_rng(7)
    f = PhaseSpaceField(g, rng.standard_normal(g.shape))  # white noise: heavy tail
    with pytest.raises(ResolutionError):
        weighted_sobolev_norm(f, WeightSpec(1, 0.0, 2.0))


def test_sobolev_order_cap():
    g = small_grid()
    f = field_from(gaussian_provider(), g)
    with pytest.raises(ValueError):
        weighted_sobolev_norm(f, WeightSpec(9, 0.0, 2.0))


# ---------------------------------------------------------------------------
# lorentz_norm
# ---------------------------------------------------------------------------

def test_lorentz_indicator_all_q():
    cell = 0.01
    g = np.zeros(1000)
    g[100:400] = 1.0  # measure 3.0
    m = 300 * cell
    for p in (1.0, 1.5, 2.0, 4.0):
        for q in (1.0, 2.0, p, 7.0, math.inf):
            assert lorentz_norm(g, p, q, cell) == pytest.approx(m ** (1 / p), rel=1e-12)


def test_lorentz_pp_matches_lp():
    rng = np.random.default_rng(3)
    cell = 0.05
    for _ in range(20):
        g = rng.standard_normal(257)
        for p in (1.0, 2.0, 3.5):
            lp = (np.sum(np.abs(g) ** p) * cell) ** (1 / p)
            assert lorentz_norm(g, p, p, cell) == pytest.approx(lp, rel=1e-10)


def test_lorentz_nesting_in_q():
    rng = np.random.default_rng(11)
    cell = 0.02
    qs = [1.0, 1.5, 2.0, 3.0, 6.0, math.inf]
    for _ in range(100):
        g = rng.standard_normal(rng.integers(10, 200))
        for p in (1.0, 2.0, 3.0):
            vals = [lorentz_norm(g, p, q, cell) for q in qs]
            assert all(b <= a * (1 + 1e-12) for a, b in zip(vals, vals[1:]))


def test_weak_l1_of_inverse_distance_stable_under_refinement():
    # ||1/|x|||_{1,inf} stays put under 2x refinement while the L1 norm grows
    def sample(n):
        x = (np.arange(n) + 0.5) / n  # punctured: never hits 0
        return 1.0 / x, 1.0 / n

    g1, c1 = sample(512)
    g2, c2 = sample(1024)
    w1 = lorentz_norm(g1, 1.0, math.inf, c1)
    w2 = lorentz_norm(g2, 1.0, math.inf, c2)
    assert abs(w2 - w1) / w1 < 0.05
    l1_1 = np.sum(g1) * c1
    l1_2 = np.sum(g2) * c2
    assert l1_2 > l1_1 + 0.5  # logarithmic divergence


# ---------------------------------------------------------------------------
# phase_norms
# ---------------------------------------------------------------------------

def test_phase_norms_constant_field():
    g = small_grid()
    c = 0.7
    f = PhaseSpaceField(g, np.full(g.shape, c))
    vol = g.x.length * g.xi.length
    for p in (1.0, 2.0, 3.0):
        assert phase_norms(f, [p])[p] == pytest.approx(c * vol ** (1 / p), rel=1e-12)
    assert phase_norms(f, [math.inf])[math.inf] == pytest.approx(c)


def test_phase_norms_holder_consistency():
    g = small_grid()
    rng = np.random.default_rng(5)
    f = PhaseSpaceField(g, np.abs(rng.standard_normal(g.shape)))
    norms = phase_norms(f, [1.0, 2.0, math.inf])
    assert norms[2.0] <= math.sqrt(norms[1.0] * norms[math.inf]) * (1 + 1e-12)


def test_quadrature_consistency_under_refinement():
    prov = gaussian_provider()
    coarse = small_grid(n=64, L=16.0)
    fine = PhaseSpaceGrid(Grid1D(128, 16.0), Grid1D(128, 16.0), dim=1)
    nc = phase_norms(field_from(prov, coarse), [1.0, 2.0])
    nf = phase_norms(field_from(prov, fine), [1.0, 2.0])
    for p in (1.0, 2.0):
        assert nc[p] == pytest.approx(nf[p], rel=1e-6)


# ---------------------------------------------------------------------------
# d=2 fields and serialization
# ---------------------------------------------------------------------------

def test_d2_density_and_norms():
    g = PhaseSpaceGrid(Grid1D(16, 8.0), Grid1D(16, 8.0), dim=2)
    x0, x1 = g.axis_points(0), g.axis_points(1)
    xi0, xi1 = g.axis_points(2), g.axis_points(3)
    vals = np.exp(-(x0**2 + x1**2 + xi0**2 + xi1**2))
    f = PhaseSpaceField(g, vals)
    rho = spatial_density(f)
    assert rho.shape == (16, 16)
    assert rho.sum() * g.x.spacing**2 == pytest.approx(f.mass, rel=1e-12)
    assert phase_norms(f, [2.0])[2.0] > 0


def test_field_roundtrip_serialization(tmp_path):
    g = small_grid(n=32)
    f = field_from(gaussian_provider(), g).with_values(
        field_from(gaussian_provider(), g).values, time=1.25
    )
    path = tmp_path / "state.psf"
    save_field(f, path)
    f2 = load_field(path)
    assert f2.grid == f.grid
    assert f2.time == 1.25
    assert np.array_equal(f2.values, f.values)
    with open(path, "rb") as fh:
        assert fh.read(4) == b"PSF1"
