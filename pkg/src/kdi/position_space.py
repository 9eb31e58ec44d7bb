"""Crank-Nicolson propagation in position space for a single pulse.

Independent cross-check of the ladder solver: the packet evolves under
H = p^2/2m + 2 hbar g1 g2 cos(2 k_L z + dw t - dtheta) + hbar (g1^2 + g2^2)
on a finite-difference grid, and diffraction-order populations are read off
the Fourier transform of the final wavefunction.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import linalg

from kdi.pulse import PulseSpec
from kdi.state import GaussianInit
from kdi.units import ScaledUnits


def crank_nicolson_pulse(
    init: GaussianInit,
    pulse: PulseSpec,
    units: ScaledUnits,
    half_width: float = 10.0,
    points_per_period: int = 100,
    dt: float = 0.005,
    ladder_max: int = 5,
) -> dict[int, float]:
    """Order populations after one pulse, starting from a Gaussian at t = 0.

    ``half_width`` is the half-length of the box in units of the packet
    width; ``points_per_period`` resolves one period (lambda/2) of the
    light potential; ``dt`` is in internal time units.
    """
    w = units.to_internal(init.width_w, "length")
    p0 = units.to_internal(init.mean_momentum, "momentum")
    coupling = units.to_internal(pulse.coupling, "frequency")
    light_shift = units.to_internal(pulse.light_shift, "frequency")
    dw = units.to_internal(pulse.delta_omega, "frequency")
    duration = units.to_internal(pulse.duration, "time")

    dz = math.pi / points_per_period
    n = 2 * int(math.ceil(half_width * w / dz)) + 1
    z = (np.arange(n) - n // 2) * dz
    psi = (2 * math.pi * w * w) ** -0.25 * np.exp(-(z**2) / (4 * w * w) + 1j * p0 * z)

    steps = max(1, math.ceil(duration / dt))
    h = duration / steps
    kin_diag = 1.0 / dz**2
    kin_off = -0.5 / dz**2
    ab = np.zeros((3, n), dtype=complex)
    ab[0, 1:] = 0.5j * h * kin_off
    ab[2, :-1] = 0.5j * h * kin_off
    for i in range(steps):
        t_mid = (i + 0.5) * h
        v = 2.0 * coupling * np.cos(2.0 * z + dw * t_mid - pulse.delta_theta) + light_shift
        diag = kin_diag + v
        rhs = (1 - 0.5j * h * diag) * psi
        rhs[1:] -= 0.5j * h * kin_off * psi[:-1]
        rhs[:-1] -= 0.5j * h * kin_off * psi[1:]
        ab[1] = 1 + 0.5j * h * diag
        psi = linalg.solve_banded((1, 1), ab, rhs)

    spectrum = np.abs(np.fft.fft(psi)) ** 2
    k = 2 * math.pi * np.fft.fftfreq(n, dz)
    order = np.floor((k - p0 + 1.0) / 2.0).astype(int)
    total = spectrum.sum()
    return {m: float(spectrum[order == m].sum() / total) for m in range(-ladder_max, ladder_max + 1)}
