"""Run configuration: TOML sections with units embedded in the key names.

Every key has a default; the defaults are the reference parameter set
(w = 3 um, T = 12 ns, T' = 10 ns, T'' = 40 ns, a = 1e10 m/s^2, 1064 nm,
0.5 W/um^2 per beam).
"""
from __future__ import annotations

import math
from pathlib import Path
from typing import Literal

import tomli
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from kdi.errors import ConfigError
from kdi.interferometer import RamseyBordeConfig, SimulationSetup
from kdi.pulse import PulseSpec
from kdi.state import GaussianInit, GridSpec
from kdi.units import CONSTANTS, W_PER_UM2, LaserConfig, balanced_pulse_duration


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class LaserSection(_Section):
    wavelength_nm: float = Field(1064.0, gt=0)
    intensity_1_w_per_um2: float = Field(0.5, ge=0)
    intensity_2_w_per_um2: float = Field(0.5, ge=0)
    phase_1_rad: float = 0.0
    phase_2_rad: float = 0.0
    polarization: str = "x"


class WavepacketSection(_Section):
    width_w_m: float = Field(3e-6, gt=0)
    mean_velocity_mps: float = 0.0


class SequenceSection(_Section):
    T_ns: float = Field(12.0, ge=0)
    T_prime_ns: float = Field(10.0, ge=0)
    T_doubleprime_ns: float = Field(40.0, ge=0)
    acceleration_mps2: float = 1e10
    timing: Literal["center", "gap"] = "center"


class NumericsSection(_Section):
    kbar_points: int = Field(512, ge=2)
    kbar_span_sigma: float = Field(6.0, gt=0)
    ladder_max: int = Field(5, ge=1)
    spatial_points: int = Field(8192, ge=2)
    window_um: tuple[float, float] = (-250.0, 300.0)
    norm_tolerance: float = Field(1e-8, gt=0)
    truncation_tolerance: float = Field(1e-6, gt=0)

    @model_validator(mode="after")
    def _window_order(self):
        if not self.window_um[1] > self.window_um[0]:
            raise ValueError("window_um must be increasing")
        return self


class OutputSection(_Section):
    csv_path: str = "density.csv"
    json_path: str = "summary.json"


class RunConfig(_Section):
    laser: LaserSection = LaserSection()
    wavepacket: WavepacketSection = WavepacketSection()
    sequence: SequenceSection = SequenceSection()
    numerics: NumericsSection = NumericsSection()
    output: OutputSection = OutputSection()

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        try:
            return cls.model_validate(data)
        except ValidationError as exc:
            err = exc.errors()[0]
            field = ".".join(str(p) for p in err["loc"])
            raise ConfigError(f"{field}: {err['msg']}", field=field) from None

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}", field="config") from None
        try:
            data = tomli.loads(text)
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"malformed config: {exc}", field="config") from None
        return cls.from_dict(data)

    def echo(self) -> dict:
        return self.model_dump(mode="json")

    def laser_config(self) -> LaserConfig:
        s = self.laser
        try:
            return LaserConfig(
                wavelength=s.wavelength_nm * 1e-9,
                intensity_1=s.intensity_1_w_per_um2 * W_PER_UM2,
                intensity_2=s.intensity_2_w_per_um2 * W_PER_UM2,
                phase_1=s.phase_1_rad,
                phase_2=s.phase_2_rad,
                polarization=s.polarization,
            )
        except ValueError as exc:
            raise ConfigError(str(exc), field="laser") from None

    def pulse_template(self) -> PulseSpec:
        laser = self.laser_config()
        if laser.g1g2 == 0:
            raise ConfigError("both laser intensities must be positive", field="laser")
        return PulseSpec(
            g1=laser.g1,
            g2=laser.g2,
            delta_omega=0.0,
            duration=balanced_pulse_duration(laser.g1g2),
            delta_theta=laser.delta_theta,
            ladder_max=self.numerics.ladder_max,
            norm_tolerance=self.numerics.norm_tolerance,
            truncation_tolerance=self.numerics.truncation_tolerance,
        )

    def ramsey_borde(self) -> RamseyBordeConfig:
        s = self.sequence
        return RamseyBordeConfig(
            T=s.T_ns * 1e-9,
            T_prime=s.T_prime_ns * 1e-9,
            T_doubleprime=s.T_doubleprime_ns * 1e-9,
            acceleration=s.acceleration_mps2,
            pulse=self.pulse_template(),
            k_L=self.laser_config().k_L,
            timing=s.timing,
        )

    def setup(self) -> SimulationSetup:
        n = self.numerics
        return SimulationSetup(
            cfg=self.ramsey_borde(),
            init=GaussianInit(
                width_w=self.wavepacket.width_w_m,
                mean_momentum=CONSTANTS.electron_mass * self.wavepacket.mean_velocity_mps,
            ),
            grid=GridSpec(points=n.kbar_points, span_sigma=n.kbar_span_sigma, ladder_max=n.ladder_max),
            window=(n.window_um[0] * 1e-6, n.window_um[1] * 1e-6),
            spatial_points=n.spatial_points,
        )


def derived_quantities(cfg: RunConfig) -> dict:
    from kdi.interferometer import path_phase_difference, phase_shift_prediction

    laser = cfg.laser_config()
    rb = cfg.ramsey_borde()
    return {
        "omega_rec_rad_per_s": laser.omega_rec,
        "g1g2_rad_per_s": laser.g1g2,
        "pulse_duration_s": rb.pulse.duration,
        "weak_coupling_margin": laser.g1g2 / laser.omega_rec,
        "delta_phi_rad": phase_shift_prediction(rb),
        "closed_pair_kinetic_phase_rad": path_phase_difference(rb),
        "fringe_period_mps2": math.pi / (laser.k_L * rb.T * rb.T_prime) if rb.T * rb.T_prime > 0 else None,
    }
