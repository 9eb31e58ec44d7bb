import math

import pytest

from kdi.interferometer import RamseyBordeConfig, SimulationSetup, simulate
from kdi.pulse import PulseSpec
from kdi.state import GaussianInit, GridSpec
from kdi.units import W_PER_UM2, LaserConfig, ScaledUnits, balanced_pulse_duration

WAVELENGTH = 1064e-9


@pytest.fixture(scope="session")
def laser():
    return LaserConfig(wavelength=WAVELENGTH, intensity_1=0.5 * W_PER_UM2, intensity_2=0.5 * W_PER_UM2)


@pytest.fixture(scope="session")
def units(laser):
    return ScaledUnits(laser.k_L)


@pytest.fixture(scope="session")
def pulse(laser):
    """Balanced pulse at the default intensities, resonant with n = 0 -> +1."""
    return PulseSpec(
        g1=laser.g1,
        g2=laser.g2,
        delta_omega=-laser.omega_rec,
        duration=balanced_pulse_duration(laser.g1g2),
    )


def ref_config(laser, pulse, **changes):
    base = dict(T=12e-9, T_prime=10e-9, T_doubleprime=40e-9, acceleration=1e10, pulse=pulse, k_L=laser.k_L)
    base.update(changes)
    return RamseyBordeConfig(**base)


@pytest.fixture(scope="session")
def ref_setup(laser, pulse):
    return SimulationSetup(cfg=ref_config(laser, pulse), init=GaussianInit(3e-6), grid=GridSpec())


@pytest.fixture(scope="session")
def ref_run(ref_setup):
    """(final state, density, paths, reports) at the reference parameters."""
    return simulate(ref_setup)


def pytest_configure(config):
    config.addinivalue_line("filterwarnings", "ignore:transverse velocity scale")


TWO_PI = 2.0 * math.pi
