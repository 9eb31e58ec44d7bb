import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kdi.errors import FrameMismatch, GridTooNarrow, NoPeaksFound, WidthNonPositive, WindowEmpty
from kdi.propagation import AcceleratedSegment, accelerated_evolve
from kdi.pulse import ideal_splitter
from kdi.state import (
    Frame,
    GaussianInit,
    GridSpec,
    SpatialDensity,
    init_gaussian,
    observables,
    peak_analysis,
    reconstruct_spatial,
)
from kdi.units import CONSTANTS

W = 3e-6


@pytest.fixture(scope="module")
def psi0(units):
    return init_gaussian(GaussianInit(W), units)


def gaussian_density(z, mean, std):
    return np.exp(-((z - mean) ** 2) / (2 * std**2)) / math.sqrt(2 * math.pi * std**2)


def test_init_gaussian_momentum_width(psi0, units):
    assert GaussianInit(W).momentum_std == pytest.approx(1.6667e5, rel=1e-4)
    # |psi(k)|^2 ~ exp(-2 k^2 w^2): std 1/(2w) evaluated on the grid
    k = psi0.kbar * units.k_L
    rho = np.abs(psi0.amplitudes[psi0.index(0)]) ** 2
    std = math.sqrt(np.trapezoid(rho * k**2, k) / np.trapezoid(rho, k))
    assert std == pytest.approx(1 / (2 * W), rel=1e-6)


def test_init_gaussian_norm_and_orders(psi0):
    assert psi0.norm() == pytest.approx(1.0, abs=1e-6)
    pops = psi0.populations()
    assert pops[psi0.index(0)] == pytest.approx(1.0, abs=1e-6)
    assert np.all(np.delete(pops, psi0.index(0)) == 0)
    assert psi0.frame is Frame.LAB
    assert psi0.amplitudes.shape == (11, 512)


def test_init_gaussian_grid_inside_zone(psi0):
    assert np.all(np.abs(psi0.kbar) < 1.0)
    assert np.allclose(np.diff(psi0.kbar), psi0.dk)


def test_init_gaussian_errors(units):
    with pytest.raises(WidthNonPositive):
        init_gaussian(GaussianInit(0.0), units)
    with pytest.raises(WidthNonPositive):
        init_gaussian(GaussianInit(-1e-6), units)
    with pytest.raises(GridTooNarrow):
        init_gaussian(GaussianInit(W), units, GridSpec(span_sigma=3.0))
    # momentum spread above k_L / 4
    with pytest.raises(GridTooNarrow):
        init_gaussian(GaussianInit(0.1e-6), units)


def test_marginal_width_detuning_spread(units, laser):
    dk = GaussianInit(1e-6).momentum_std
    assert dk == pytest.approx(5e5)
    spread = 2 * CONSTANTS.hbar * units.k_L * dk / CONSTANTS.electron_mass
    assert spread == pytest.approx(6.8e8, rel=1e-2)
    assert laser.g1g2 == pytest.approx(5.0e8, rel=1e-2)


def test_mean_momentum_goes_to_offset(units):
    p0 = 0.1 * CONSTANTS.hbar * units.k_L
    s = init_gaussian(GaussianInit(W, mean_momentum=p0), units)
    assert s.momentum_offset_si == pytest.approx(p0)
    assert observables(s)["mean_momentum"] == pytest.approx(p0, rel=1e-9)


def test_reconstruct_initial_gaussian(units):
    # +-12 std in momentum: cutoff ripple below double precision
    wide = init_gaussian(GaussianInit(W), units, GridSpec(points=2048, span_sigma=12.0))
    d = reconstruct_spatial(wide, (-20e-6, 20e-6), 801)
    ref = gaussian_density(d.positions, 0.0, W)
    assert np.max(np.abs(d.density - ref)) < 1e-9 * ref.max()
    assert d.total() == pytest.approx(1.0, abs=1e-3)
    std = math.sqrt(np.trapezoid(d.positions**2 * d.density, d.positions) / d.total())
    assert std == pytest.approx(W, rel=1e-3)


def test_reconstruct_default_grid_cutoff_ripple(psi0):
    # the +-6 std cutoff leaves exp(-9) edge amplitude, i.e. ~1e-4 ripple
    d = reconstruct_spatial(psi0, (-20e-6, 20e-6), 801)
    ref = gaussian_density(d.positions, 0.0, W)
    assert np.max(np.abs(d.density - ref)) < 1e-4 * ref.max()
    assert np.all(d.density >= 0)


def test_reconstruct_order_translation_invariant(psi0):
    moved = np.zeros_like(psi0.amplitudes)
    moved[psi0.index(1)] = psi0.amplitudes[psi0.index(0)]
    a = reconstruct_spatial(psi0, (-15e-6, 15e-6), 301)
    b = reconstruct_spatial(psi0.with_amplitudes(moved), (-15e-6, 15e-6), 301)
    np.testing.assert_allclose(b.density, a.density, rtol=1e-10, atol=1e-12 * a.density.max())


def test_reconstruct_two_order_beat(units):
    psi0 = init_gaussian(GaussianInit(W), units, GridSpec(points=2048, span_sigma=12.0))
    amps = np.zeros_like(psi0.amplitudes)
    amps[psi0.index(0)] = amps[psi0.index(1)] = psi0.amplitudes[psi0.index(0)] / math.sqrt(2)
    d = reconstruct_spatial(psi0.with_amplitudes(amps), (-3e-6, 3e-6), 2001)
    ref = gaussian_density(d.positions, 0.0, W) * (1 + np.cos(2 * units.k_L * d.positions))
    assert np.max(np.abs(d.density - ref)) < 1e-9 * ref.max()
    # fringe period lambda/2 = 532 nm
    assert math.pi / units.k_L == pytest.approx(532e-9, rel=1e-12)


def test_reconstruct_errors(psi0):
    with pytest.raises(FrameMismatch):
        reconstruct_spatial(replace(psi0, frame=Frame.ROTATING), (-1e-6, 1e-6), 10)
    with pytest.raises(WindowEmpty):
        reconstruct_spatial(psi0, (1e-6, -1e-6), 10)
    with pytest.raises(WindowEmpty):
        reconstruct_spatial(psi0, (-1e-6, 1e-6), 1)


def test_reconstruct_refinement_stable(psi0):
    coarse = reconstruct_spatial(psi0, (-20e-6, 20e-6), 201)
    fine = reconstruct_spatial(psi0, (-20e-6, 20e-6), 401)
    np.testing.assert_allclose(fine.density[::2], coarse.density, rtol=1e-6)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False))
def test_reconstruct_linear(seed, c):
    from kdi.state import _spatial_amplitude

    rng = np.random.default_rng(seed)
    from kdi.units import ScaledUnits

    units = ScaledUnits(2 * math.pi / 1064e-9)
    base = init_gaussian(GaussianInit(W), units, GridSpec(points=32, ladder_max=2))
    a = base.with_amplitudes(rng.normal(size=base.amplitudes.shape) + 1j * rng.normal(size=base.amplitudes.shape))
    b = base.with_amplitudes(rng.normal(size=base.amplitudes.shape) + 1j * rng.normal(size=base.amplitudes.shape))
    z = np.linspace(-30.0, 30.0, 41)
    lhs = _spatial_amplitude(a.with_amplitudes(a.amplitudes + c * b.amplitudes), z)
    rhs = _spatial_amplitude(a, z) + c * _spatial_amplitude(b, z)
    np.testing.assert_allclose(lhs, rhs, atol=1e-10 * (1 + np.abs(rhs).max()))


def test_observables_initial(psi0):
    obs = observables(psi0)
    assert obs["norm"] == pytest.approx(1.0, abs=1e-6)
    assert obs["mean_momentum"] == pytest.approx(0.0, abs=1e-40)
    assert obs["ladder_populations"][0] == pytest.approx(1.0, abs=1e-6)
    assert sum(v for k, v in obs["ladder_populations"].items() if k != 0) == 0


def test_observables_after_ideal_splitter(psi0, units):
    obs = observables(ideal_splitter(psi0, "minus"))
    assert obs["ladder_populations"][0] == pytest.approx(0.5, abs=1e-6)
    assert obs["ladder_populations"][1] == pytest.approx(0.5, abs=1e-6)
    assert obs["mean_momentum"] == pytest.approx(CONSTANTS.hbar * units.k_L, rel=1e-6)


def test_observables_after_acceleration(psi0):
    out = accelerated_evolve(psi0, AcceleratedSegment(10e-9, 1e10))
    assert observables(out)["mean_momentum"] == pytest.approx(CONSTANTS.electron_mass * 100.0, rel=1e-9)


def test_mean_momentum_tracks_offset(psi0, units):
    dp = 0.37
    shifted = replace(psi0, momentum_offset=psi0.momentum_offset + dp)
    diff = observables(shifted)["mean_momentum"] - observables(psi0)["mean_momentum"]
    assert diff == pytest.approx(units.from_internal(dp, "momentum"), rel=1e-9)


def _density(z, *components):
    rho = sum(m * gaussian_density(z, c, s) for m, c, s in components)
    return SpatialDensity(z, rho)


def test_peak_single_gaussian():
    z = np.linspace(-20e-6, 20e-6, 4001)
    peaks = peak_analysis(_density(z, (1.0, 1.3e-6, 3e-6)))
    assert len(peaks) == 1
    assert peaks[0]["center"] == pytest.approx(1.3e-6, abs=z[1] - z[0])
    assert peaks[0]["mass"] == pytest.approx(1.0, abs=1e-3)
    assert peaks[0]["width"] == pytest.approx(3e-6, rel=1e-2)


def test_peak_two_gaussians_masses():
    z = np.linspace(-20e-6, 20e-6, 4001)
    peaks = peak_analysis(_density(z, (0.25, -5e-6, 1e-6), (0.75, 5e-6, 1e-6)))
    assert [p["mass"] for p in peaks] == [pytest.approx(0.25, abs=1e-3), pytest.approx(0.75, abs=1e-3)]
    assert peaks[0]["center"] < peaks[1]["center"]


def test_peak_smoothing_removes_beat_fringes(units):
    z = np.linspace(-20e-6, 20e-6, 8001)
    rho = gaussian_density(z, 0.0, 3e-6) * (1 + np.cos(2 * units.k_L * z))
    assert len(peak_analysis(SpatialDensity(z, rho))) > 10
    assert len(peak_analysis(SpatialDensity(z, rho), smoothing=math.pi / units.k_L)) == 1


def test_peak_errors():
    z = np.linspace(0, 1, 10)
    with pytest.raises(NoPeaksFound):
        peak_analysis(SpatialDensity(z, np.zeros(10)))
    with pytest.raises(NoPeaksFound):
        peak_analysis(SpatialDensity(np.array([]), np.array([])))


def test_density_csv_format():
    d = SpatialDensity(np.array([0.0, 1e-6 / 3]), np.array([1.0 / 3, 2.0]))
    text = d.to_csv()
    lines = text.split("\n")
    assert lines[0] == "z_m,density_per_m"
    z, rho = lines[2].split(",")
    assert float(z) == 1e-6 / 3 and rho == "2"
    assert z == format(1e-6 / 3, ".17g")
    assert float(lines[1].split(",")[1]) == 1.0 / 3
    assert text.endswith("\n") and "\r" not in text
