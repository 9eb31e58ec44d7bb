"""Field-free and uniformly accelerated flight between pulses.

Both are diagonal in momentum: free flight multiplies each plane wave by
exp(-i T E(p)/hbar); a constant force additionally shifts every momentum
by m a T', which is stored in ``momentum_offset`` instead of regridding.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from kdi.state import Frame, LadderWavefunction
from kdi.units import CONSTANTS


@dataclass(frozen=True)
class FreeSegment:
    duration: float  # s

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError("free segment duration must be non-negative")


@dataclass(frozen=True)
class AcceleratedSegment:
    duration: float  # s
    acceleration: float  # m/s^2

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError("accelerated segment duration must be non-negative")


def _lab_momenta(state: LadderWavefunction) -> np.ndarray:
    return state.kbar[None, :] + 2.0 * state.orders[:, None] + state.momentum_offset


def free_evolve(state: LadderWavefunction, seg: FreeSegment) -> LadderWavefunction:
    state.require_frame(Frame.LAB)
    t = state.units.to_internal(seg.duration, "time")
    if t == 0:
        return state
    p = _lab_momenta(state)
    return state.with_amplitudes(state.amplitudes * np.exp(-0.5j * t * p**2), time=state.time + t)


def _tau_internal(p, t, a):
    # (1/hbar) int_0^t E(p + m a s) ds with hbar = m = 1
    return 0.5 * p**2 * t + 0.5 * p * a * t**2 + a**2 * t**3 / 6.0


def tau_phase(p: float, seg: AcceleratedSegment) -> float:
    """Phase (1/hbar) int_0^T' E(p + m a t) dt for momentum ``p`` in kg m/s."""
    c = CONSTANTS
    t, a = seg.duration, seg.acceleration
    m = c.electron_mass
    return (p**2 * t / (2 * m) + p * a * t**2 / 2 + m * a**2 * t**3 / 6) / c.hbar


def accelerated_evolve(state: LadderWavefunction, seg: AcceleratedSegment) -> LadderWavefunction:
    state.require_frame(Frame.LAB)
    u = state.units
    t = u.to_internal(seg.duration, "time")
    a = u.to_internal(seg.acceleration, "acceleration")
    if t == 0:
        return state
    p = _lab_momenta(state)
    return state.with_amplitudes(
        state.amplitudes * np.exp(-1j * _tau_internal(p, t, a)),
        momentum_offset=state.momentum_offset + a * t,
        time=state.time + t,
    )
