"""Four-pulse Ramsey-Bordé sequence, classical partial beams and fringes.

Pulse pair one (dw = -w_rec) couples p ~ 0 with p ~ +2 hbar k_L; pair two
(dw = +w_rec) couples p ~ 0 with p ~ -2 hbar k_L.  Ten classical branches
survive resonance selectivity and merge into eight output beams I-VIII.
"""
from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Union

import numpy as np

from kdi.errors import BeamUnresolved, ConfigError, NormDrift
from kdi.propagation import AcceleratedSegment, FreeSegment, accelerated_evolve, free_evolve
from kdi.pulse import (
    PulseSpec,
    TwoLevelModel,
    evolve_pulse,
    ideal_splitter,
    splitter_matrix,
    two_level_evolution,
)
from kdi.state import GaussianInit, GridSpec, LadderWavefunction, SpatialDensity, init_gaussian, reconstruct_spatial
from kdi.units import CONSTANTS, ScaledUnits, recoil_frequency

SequenceStep = Union[PulseSpec, FreeSegment, AcceleratedSegment]

ROMAN = ("I", "II", "III", "IV", "V", "VI", "VII", "VIII")

# ladder order after each of the four pulses -> output beam
BEAM_OF_ORDERS = {
    (1, 0, -1, 0): "I",
    (0, 0, 0, 0): "I",
    (1, 0, 0, 0): "II",
    (0, 0, -1, 0): "III",
    (1, 0, 0, -1): "IV",
    (1, 0, -1, -1): "V",
    (0, 0, 0, -1): "V",
    (0, 0, -1, -1): "VI",
    (0, 1, 1, 1): "VII",
    (1, 1, 1, 1): "VIII",
}

DOPPLER_VELOCITY_LIMIT = 500.0  # m/s


@dataclass(frozen=True)
class RamseyBordeConfig:
    """Timings in s, acceleration in m/s^2.

    With ``timing="center"`` (default) ``T`` is the spacing between the
    centres of the two pulses of a pair, so the field-off gap is
    ``T - duration``; with ``timing="gap"`` ``T`` is the field-off gap
    itself.  ``T_prime`` and ``T_doubleprime`` are always field-off times.
    The detuning of ``pulse`` is overridden per pair.
    """

    T: float
    T_prime: float
    T_doubleprime: float
    acceleration: float
    pulse: PulseSpec
    k_L: float
    timing: str = "center"

    def __post_init__(self):
        for name in ("T", "T_prime", "T_doubleprime"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative", field=name)
        if self.timing not in ("center", "gap"):
            raise ConfigError(f"unknown timing convention {self.timing!r}", field="timing")
        if self.gap < 0:
            raise ConfigError("T is shorter than the pulse duration", field="T")
        if not self.k_L > 0:
            raise ConfigError("k_L must be positive", field="k_L")

    @property
    def omega_rec(self) -> float:
        return recoil_frequency(self.k_L)

    @property
    def units(self) -> ScaledUnits:
        return ScaledUnits(self.k_L)

    @property
    def gap(self) -> float:
        """Field-off time between the two pulses of a pair (s)."""
        return self.T - self.pulse.duration if self.timing == "center" else self.T

    def pulses(self) -> tuple[PulseSpec, PulseSpec]:
        w = self.omega_rec
        return self.pulse.with_(delta_omega=-w), self.pulse.with_(delta_omega=w)

    def with_(self, **changes) -> "RamseyBordeConfig":
        return replace(self, **changes)


def build_ramsey_borde(cfg: RamseyBordeConfig) -> tuple[SequenceStep, ...]:
    minus, plus = cfg.pulses()
    if cfg.acceleration == 0:
        middle: SequenceStep = FreeSegment(cfg.T_prime)
    else:
        middle = AcceleratedSegment(cfg.T_prime, cfg.acceleration)
    gap = FreeSegment(cfg.gap)
    steps: list[SequenceStep] = [minus, gap, minus, middle, plus, gap, plus]
    if cfg.T_doubleprime > 0:
        steps.append(FreeSegment(cfg.T_doubleprime))
    return tuple(steps)


def total_duration(seq) -> float:
    return float(sum(step.duration for step in seq))


def run_sequence(
    state: LadderWavefunction, seq, norm_tolerance: float = 4e-8, model: str = "numeric"
) -> LadderWavefunction:
    """Apply the steps in order.

    ``model="ideal"`` replaces every pulse by the instantaneous splitter
    (off-resonant orders pass through); pulse durations are then skipped.
    """
    if model not in ("numeric", "ideal"):
        raise ValueError(f"unknown model {model!r}")
    norm_in = state.norm()
    for step in seq:
        if isinstance(step, PulseSpec):
            if model == "ideal":
                sign = "minus" if step.delta_omega < 0 else "plus"
                state = ideal_splitter(state, sign, allow_spectators=True)
            else:
                state = evolve_pulse(state, step)
        elif isinstance(step, AcceleratedSegment):
            state = accelerated_evolve(state, step)
        elif isinstance(step, FreeSegment):
            state = free_evolve(state, step)
        else:
            raise TypeError(f"unknown sequence step {step!r}")
    drift = abs(state.norm() - norm_in)
    if drift > norm_tolerance:
        raise NormDrift(f"sequence norm drift {drift:.3e}")
    return state


def doppler_check(cfg: RamseyBordeConfig, initial_velocity: float = 0.0) -> float:
    """Largest transverse velocity reached; warns above the Doppler limit."""
    v = abs(initial_velocity) + abs(cfg.acceleration) * (cfg.T_prime + cfg.T + cfg.T_doubleprime)
    if v > DOPPLER_VELOCITY_LIMIT:
        warnings.warn(
            f"transverse velocity scale {v:.0f} m/s exceeds {DOPPLER_VELOCITY_LIMIT:.0f} m/s; "
            "Doppler detuning of the pulses is not modelled",
            stacklevel=2,
        )
    return v


@dataclass
class ClassicalPath:
    kick_pattern: tuple[int, ...]  # momentum transfer per pulse, units of 2 hbar k_L
    orders: tuple[int, ...]  # ladder order after each pulse
    final_position: float  # m
    final_momentum: float  # kg m/s
    amplitude_weight: complex
    beam_label: str = ""

    def to_dict(self) -> dict:
        return {
            "beam_label": self.beam_label,
            "kick_pattern": list(self.kick_pattern),
            "orders": list(self.orders),
            "final_position_m": self.final_position,
            "final_momentum_kgmps": self.final_momentum,
            "amplitude_weight": [self.amplitude_weight.real, self.amplitude_weight.imag],
        }


def _kicked_dwell(pulse: PulseSpec, detuning: float, row: int, col: int) -> float:
    """Time the amplitude U[row, col] effectively spends in the kicked order.

    Minus the derivative of its phase with respect to the kicked-order
    detuning, from the closed-form two-level propagator.
    """
    h = 1e-6 * max(abs(pulse.coupling), 1.0)

    def phase(d):
        return np.angle(two_level_evolution(TwoLevelModel(pulse.coupling, d), pulse.duration)[row, col])

    dphi = np.angle(np.exp(1j * (phase(detuning + h) - phase(detuning - h))))
    return float(-dphi / (2 * h))


def enumerate_paths(
    cfg: RamseyBordeConfig,
    initial_velocity: float = 0.0,
    pulse_model: str = "average",
    merge_position_tol: float = 3e-8,
) -> list[ClassicalPath]:
    """Branch the classical trajectory at every pulse.

    A pulse acts only on branches resonant with it (order 0 or +1 for the
    first pair, 0 or -1 for the second); others pass through.  While a
    pulse is on, ``pulse_model`` sets the motion:

    * ``"average"``: the mean of the pre- and post-pulse velocity;
    * ``"group_delay"``: base velocity plus the kick velocity for the dwell
      time in the kicked order given by the two-level propagator phase;
    * ``"instant"``: pulses take no time (with centre timing they sit at
      the pulse centres, so pulses of a pair are ``T`` apart).
    """
    if pulse_model not in ("average", "group_delay", "instant"):
        raise ConfigError(f"unknown pulse model {pulse_model!r}", field="pulse_model")
    if pulse_model == "instant" and cfg.timing == "center":
        # point pulses at the pulse centres
        cfg = cfg.with_(pulse=cfg.pulse.with_(duration=0.0))
    v_kick = 2.0 * CONSTANTS.hbar * cfg.k_L / CONSTANTS.electron_mass
    u = splitter_matrix()
    # branch: (orders, amplitude, position, velocity, current order)
    branches = [((), 1.0 + 0j, 0.0, initial_velocity, 0)]
    for step in build_ramsey_borde(cfg):
        nxt = []
        for orders, amp, z, v, j in branches:
            if isinstance(step, PulseSpec):
                kicked = 1 if step.delta_omega < 0 else -1
                tau = 0.0 if pulse_model == "instant" else step.duration
                if j in (0, kicked):
                    col = 0 if j == 0 else 1
                    v_base = v - j * v_kick
                    for row, j_new in ((0, 0), (1, kicked)):
                        v_new = v_base + j_new * v_kick
                        if pulse_model == "group_delay":
                            detuning = kicked * 2.0 * cfg.k_L * v_base
                            dwell = _kicked_dwell(step, detuning, row, col)
                            dz = v_base * tau + kicked * v_kick * dwell
                        else:
                            dz = 0.5 * (v + v_new) * tau
                        nxt.append((orders + (j_new,), amp * u[row, col], z + dz, v_new, j_new))
                else:
                    nxt.append((orders + (j,), amp, z + v * tau, v, j))
            elif isinstance(step, AcceleratedSegment):
                t, a = step.duration, step.acceleration
                nxt.append((orders, amp, z + v * t + 0.5 * a * t * t, v + a * t, j))
            else:
                nxt.append((orders, amp, z + v * step.duration, v, j))
        branches = nxt

    m = CONSTANTS.electron_mass
    paths = []
    for orders, amp, z, v, _ in branches:
        kicks = tuple(b - a for a, b in zip((0,) + orders[:-1], orders))
        paths.append(ClassicalPath(kicks, orders, z, m * v, complex(amp), BEAM_OF_ORDERS.get(orders, "")))
    if pulse_model != "group_delay":
        # detuned pulses shift the two closed arms by different dwell times
        _check_merges(paths, merge_position_tol, 1e-3 * CONSTANTS.hbar * cfg.k_L)
    return sorted(paths, key=lambda p: (ROMAN.index(p.beam_label), p.orders))


def _check_merges(paths, z_tol, p_tol):
    for label in ROMAN:
        members = [p for p in paths if p.beam_label == label]
        for p in members[1:]:
            if abs(p.final_position - members[0].final_position) > z_tol or abs(
                p.final_momentum - members[0].final_momentum
            ) > p_tol:
                raise AssertionError(f"paths of beam {label} do not close")


def predicted_beams(paths: list[ClassicalPath]) -> dict[str, dict]:
    """Per beam: predicted position, final momentum and |sum of weights|^2."""
    out = {}
    for label in ROMAN:
        members = [p for p in paths if p.beam_label == label]
        if members:
            out[label] = {
                "position": float(np.mean([p.final_position for p in members])),
                "momentum": members[0].final_momentum,
                "weight": sum(p.amplitude_weight for p in members),
                "paths": len(members),
            }
    return out


@dataclass
class BeamReport:
    label: str
    predicted_position: float
    measured_position: float
    population: float
    width: float

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "predicted_position_m": self.predicted_position,
            "measured_position_m": self.measured_position,
            "population": self.population,
            "width_m": self.width,
        }


def beam_reports(
    density: SpatialDensity, paths: list[ClassicalPath], outer_margin: float = 25e-6
) -> list[BeamReport]:
    """Integrate the density over the window of each predicted beam.

    Windows are bounded by midpoints between neighbouring predicted
    positions; the outermost beams extend ``outer_margin`` (m) beyond their
    predicted position, so fast leakage orders stay unassigned.  Beams
    sharing a predicted position are reported together under the first
    label.
    """
    beams = predicted_beams(paths)
    ordered = sorted(beams.items(), key=lambda kv: kv[1]["position"])
    centers = np.array([b["position"] for _, b in ordered])
    bounds = np.concatenate(
        ([centers[0] - outer_margin], 0.5 * (centers[1:] + centers[:-1]), [centers[-1] + outer_margin])
    )
    z, rho, dz = density.positions, density.density, density.dz
    reports = []
    for (label, beam), lo, hi in zip(ordered, bounds[:-1], bounds[1:]):
        sel = (z >= lo) & (z < hi)
        mass = float(rho[sel].sum() * dz)
        if mass > 0:
            center = float((z[sel] * rho[sel]).sum() * dz / mass)
            width = float(math.sqrt(((z[sel] - center) ** 2 * rho[sel]).sum() * dz / mass))
        else:
            center, width = float("nan"), float("nan")
        reports.append(BeamReport(label, beam["position"], center, mass, width))
    return sorted(reports, key=lambda r: ROMAN.index(r.label))


def phase_shift_prediction(cfg: RamseyBordeConfig) -> float:
    """Closed-pair phase 4 hbar k_L^2 T'/m - 2 a k_L T T' (rad)."""
    return 2.0 * cfg.omega_rec * cfg.T_prime - 2.0 * cfg.acceleration * cfg.k_L * cfg.T * cfg.T_prime


def path_phase_difference(cfg: RamseyBordeConfig, p: float = 0.0) -> float:
    """Kinetic phase of the kicked closed arm minus the unkicked arm (rad).

    Evaluates the two closed-geometry terms of the final state for
    instantaneous pulses and initial momentum ``p`` (kg m/s).
    """
    c = CONSTANTS
    hk = 2.0 * c.hbar * cfg.k_L
    ma = c.electron_mass * cfg.acceleration * cfg.T_prime

    def energy(q):
        return q * q / (2.0 * c.electron_mass)

    kicked = energy(p + hk) + energy(p - hk + ma)
    straight = energy(p) + energy(p + ma)
    return (kicked - straight) * cfg.T / c.hbar


@dataclass(frozen=True)
class SimulationSetup:
    """Everything needed to run the full numeric sequence."""

    cfg: RamseyBordeConfig
    init: GaussianInit
    grid: GridSpec = GridSpec()
    window: tuple[float, float] = (-250e-6, 300e-6)
    spatial_points: int = 8192

    def initial_state(self) -> LadderWavefunction:
        return init_gaussian(self.init, self.cfg.units, self.grid)

    @property
    def initial_velocity(self) -> float:
        return self.init.mean_momentum / CONSTANTS.electron_mass


def simulate(setup: SimulationSetup):
    """Run the sequence; returns (final state, density, paths, beam reports)."""
    doppler_check(setup.cfg, setup.initial_velocity)
    final = run_sequence(setup.initial_state(), build_ramsey_borde(setup.cfg))
    density = reconstruct_spatial(final, setup.window, setup.spatial_points)
    paths = enumerate_paths(setup.cfg, setup.initial_velocity)
    return final, density, paths, beam_reports(density, paths)


def _fringe_point(args) -> dict:
    setup, param, value = args
    if param == "a":
        cfg = setup.cfg.with_(acceleration=value)
    elif param == "T_prime":
        cfg = setup.cfg.with_(T_prime=value)
    else:
        raise ConfigError(f"unknown sweep parameter {param!r}", field="param")
    point = replace(setup, cfg=cfg)
    _, _, _, reports = simulate(point)
    by_label = {r.label: r for r in reports}
    if "I" not in by_label or "V" not in by_label:
        raise BeamUnresolved(f"beams I/V not resolved at {param}={value}", param=value)
    i_, v_ = by_label["I"], by_label["V"]
    if abs(i_.predicted_position - v_.predicted_position) < 4 * setup.init.width_w:
        raise BeamUnresolved(f"beams I and V overlap at {param}={value}; increase T''", param=value)
    dphi = phase_shift_prediction(cfg)
    return {
        "param": value,
        "pop_I": i_.population,
        "pop_V": v_.population,
        "delta_phi_rad": dphi,
        "model_I": 0.25 * math.cos(0.5 * dphi) ** 2,
        "model_V": 0.25 * math.sin(0.5 * dphi) ** 2,
    }


def worker_count() -> int:
    raw = os.environ.get("KDI_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


def beam_fringe(setup: SimulationSetup, param: str, values, workers: int | None = None) -> list[dict]:
    """Beam I/V populations over a sweep of ``a`` (m/s^2) or ``T_prime`` (s).

    Points run independently (in worker processes when more than one
    worker is available); rows come back in input order.
    """
    if param not in ("a", "T_prime"):
        raise ConfigError(f"unknown sweep parameter {param!r}", field="param")
    jobs = [(setup, param, float(v)) for v in values]
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(jobs) <= 1:
        return [_fringe_point(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(_fringe_point, jobs))
