"""Physical constants, laser parameters and the dimensionless unit system.

Internally everything runs with hbar = m = k_L = 1.  In those units the
recoil shift is 2, lengths are measured in 1/k_L, momenta in hbar k_L and
times in m / (hbar k_L^2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA-2018 values in SI units (not user-settable)."""

    hbar: float = field(default=1.054571817e-34, init=False)
    electron_mass: float = field(default=9.1093837015e-31, init=False)
    elementary_charge: float = field(default=1.602176634e-19, init=False)
    light_speed: float = field(default=299792458.0, init=False)
    vacuum_permittivity: float = field(default=8.8541878128e-12, init=False)


CONSTANTS = PhysicalConstants()

# W/um^2 -> W/m^2
W_PER_UM2 = 1e12


def recoil_frequency(k_L: float) -> float:
    """Recoil shift 2 hbar k_L^2 / m in rad/s."""
    if not k_L > 0:
        raise ValueError("k_L must be positive")
    return 2.0 * CONSTANTS.hbar * k_L**2 / CONSTANTS.electron_mass


def coupling_from_intensity(intensity: float, omega: float) -> float:
    """Coupling amplitude g = q E / (4 omega sqrt(m hbar)) in s^-1/2.

    The field amplitude follows from the intensity via I = 2 c eps0 E^2.
    """
    if intensity < 0:
        raise ValueError("intensity must be non-negative")
    if not omega > 0:
        raise ValueError("omega must be positive")
    c = CONSTANTS
    field_amplitude = math.sqrt(intensity / (2.0 * c.light_speed * c.vacuum_permittivity))
    return c.elementary_charge * field_amplitude / (
        4.0 * omega * math.sqrt(c.electron_mass * c.hbar)
    )


def weak_coupling_margin(intensity: float, omega: float, k_L: float) -> float:
    """Ratio q^2 I / (32 omega^2 m hbar c eps0) / omega_rec.

    Values of 0.1 and above mean the two-level picture starts to fail.
    """
    c = CONSTANTS
    light_shift = c.elementary_charge**2 * intensity / (
        32.0 * omega**2 * c.electron_mass * c.hbar * c.light_speed * c.vacuum_permittivity
    )
    return light_shift / recoil_frequency(k_L)


def balanced_pulse_duration(g1g2: float) -> float:
    """Duration pi / (4 g1 g2) of a 50/50 splitting pulse."""
    if not g1g2 > 0:
        raise ValueError("g1g2 must be positive")
    return math.pi / (4.0 * g1g2)


def critical_intensity(omega: float, k_L: float) -> float:
    """Intensity (W/m^2) at which the weak-coupling margin reaches one."""
    return 1.0 / weak_coupling_margin(1.0, omega, k_L)


@dataclass(frozen=True)
class LaserConfig:
    """Two counter-propagating lasers sharing the mean wavenumber k_L.

    Intensities are in W/m^2, phases in rad.  The polarization tag is
    descriptive only.
    """

    wavelength: float = 1064e-9
    intensity_1: float = 0.5 * W_PER_UM2
    intensity_2: float = 0.5 * W_PER_UM2
    phase_1: float = 0.0
    phase_2: float = 0.0
    polarization: str = "x"

    def __post_init__(self):
        if not self.wavelength > 0:
            raise ValueError("wavelength must be positive")
        if self.intensity_1 < 0 or self.intensity_2 < 0:
            raise ValueError("intensities must be non-negative")
        if self.omega / self.omega_rec <= 1e3:
            raise ValueError("optical frequency does not dominate the recoil shift")

    @property
    def k_L(self) -> float:
        return 2.0 * math.pi / self.wavelength

    @property
    def omega(self) -> float:
        return CONSTANTS.light_speed * self.k_L

    @property
    def omega_rec(self) -> float:
        return recoil_frequency(self.k_L)

    @property
    def g1(self) -> float:
        return coupling_from_intensity(self.intensity_1, self.omega)

    @property
    def g2(self) -> float:
        return coupling_from_intensity(self.intensity_2, self.omega)

    @property
    def g1g2(self) -> float:
        return self.g1 * self.g2

    @property
    def delta_theta(self) -> float:
        return self.phase_2 - self.phase_1

    def margin(self) -> float:
        """Weak-coupling margin for the product coupling g1 g2."""
        return self.g1g2 / self.omega_rec


class ScaledUnits:
    """Conversion between SI and the hbar = m = k_L = 1 system."""

    def __init__(self, k_L: float):
        if not k_L > 0:
            raise ValueError("k_L must be positive")
        c = CONSTANTS
        self.k_L = float(k_L)
        self.length_unit = 1.0 / k_L
        self.momentum_unit = c.hbar * k_L
        self.time_unit = c.electron_mass / (c.hbar * k_L**2)
        self._scale = {
            "length": self.length_unit,
            "time": self.time_unit,
            "momentum": self.momentum_unit,
            "wavenumber": k_L,
            "frequency": 1.0 / self.time_unit,
            "velocity": self.length_unit / self.time_unit,
            "acceleration": self.length_unit / self.time_unit**2,
            # g_i carries s^-1/2 so that g1 g2 is a frequency
            "coupling": self.time_unit**-0.5,
        }

    @classmethod
    def from_wavelength(cls, wavelength: float) -> "ScaledUnits":
        return cls(2.0 * math.pi / wavelength)

    @property
    def omega_rec(self) -> float:
        return recoil_frequency(self.k_L)

    def to_internal(self, value, kind: str):
        return value / self._scale[kind]

    def from_internal(self, value, kind: str):
        return value * self._scale[kind]

    def __repr__(self):
        return f"ScaledUnits(k_L={self.k_L!r})"

    def __eq__(self, other):
        return isinstance(other, ScaledUnits) and other.k_L == self.k_L

    def __hash__(self):
        return hash(self.k_L)
