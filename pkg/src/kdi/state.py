"""Ladder wavefunction, initial states and position-space analysis."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Any

import numpy as np
from scipy import ndimage, signal, special

from kdi.errors import FrameMismatch, GridTooNarrow, NoPeaksFound, WidthNonPositive, WindowEmpty
from kdi.units import ScaledUnits


class Frame(enum.Enum):
    LAB = "lab"
    ROTATING = "rotating"


@dataclass(frozen=True)
class LadderWavefunction:
    """Amplitudes psi_n(kbar) for n = -N..N on a uniform kbar grid.

    All numbers are in internal units (see ``kdi.units``): ``kbar`` in k_L,
    ``momentum_offset`` in hbar k_L and ``time`` in m/(hbar k_L^2).  The
    lab-frame momentum of amplitude ``[i, j]`` is
    ``kbar[j] + 2 * orders[i] + momentum_offset``.

    ``context`` holds the pulse parameters while the state sits in the
    rotating frame of that pulse.
    """

    amplitudes: np.ndarray
    kbar: np.ndarray
    units: ScaledUnits
    momentum_offset: float = 0.0
    time: float = 0.0
    frame: Frame = Frame.LAB
    context: Any = None

    @property
    def ladder_max(self) -> int:
        return (self.amplitudes.shape[0] - 1) // 2

    @property
    def orders(self) -> np.ndarray:
        return np.arange(-self.ladder_max, self.ladder_max + 1)

    @property
    def dk(self) -> float:
        return float(self.kbar[1] - self.kbar[0]) if self.kbar.size > 1 else 1.0

    @property
    def time_s(self) -> float:
        return self.units.from_internal(self.time, "time")

    @property
    def momentum_offset_si(self) -> float:
        return self.units.from_internal(self.momentum_offset, "momentum")

    def index(self, n: int) -> int:
        return n + self.ladder_max

    def populations(self) -> np.ndarray:
        return _trapezoid(np.abs(self.amplitudes) ** 2, self.dk)

    def norm(self) -> float:
        return float(self.populations().sum())

    def edge_population(self) -> float:
        pops = self.populations()
        return float(pops[0] + pops[-1])

    def with_amplitudes(self, amplitudes, **changes) -> "LadderWavefunction":
        return replace(self, amplitudes=amplitudes, **changes)

    def require_frame(self, frame: Frame):
        if self.frame is not frame:
            raise FrameMismatch(f"state is in {self.frame.value} frame, expected {frame.value}")


def _trapezoid(values: np.ndarray, dx: float) -> np.ndarray:
    if values.shape[-1] < 2:
        return values.sum(axis=-1) * dx
    return np.trapezoid(values, dx=dx, axis=-1)


@dataclass(frozen=True)
class SpatialDensity:
    positions: np.ndarray  # m
    density: np.ndarray  # 1/m

    @property
    def window(self) -> tuple[float, float]:
        return float(self.positions[0]), float(self.positions[-1])

    @property
    def dz(self) -> float:
        return float(self.positions[1] - self.positions[0])

    def total(self) -> float:
        return float(np.trapezoid(self.density, self.positions))

    def to_csv(self) -> str:
        lines = ["z_m,density_per_m"]
        lines.extend(f"{z:.17g},{d:.17g}" for z, d in zip(self.positions, self.density))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class GaussianInit:
    """Minimum-uncertainty packet psi(k) ~ exp(-k^2 w^2), SI inputs."""

    width_w: float
    mean_momentum: float = 0.0
    # guard on the momentum std 1/(2w) relative to k_L
    max_spread_fraction: float = 0.25

    @property
    def momentum_std(self) -> float:
        """Standard deviation 1/(2w) of |psi(k)|^2, in 1/m."""
        return 1.0 / (2.0 * self.width_w)


@dataclass(frozen=True)
class GridSpec:
    points: int = 512
    span_sigma: float = 6.0  # half-width in momentum standard deviations
    ladder_max: int = 5


def init_gaussian(
    cfg: GaussianInit, units: ScaledUnits, grid: GridSpec = GridSpec(), tail_tolerance: float = 1e-6
) -> LadderWavefunction:
    """Gaussian packet entirely in order n = 0 on a kbar grid centred at 0.

    The mean momentum is carried by ``momentum_offset`` so the grid always
    sits on the occupied region.
    """
    if not cfg.width_w > 0:
        raise WidthNonPositive("wavepacket width must be positive", field="width_w")
    sigma = cfg.momentum_std
    if sigma > cfg.max_spread_fraction * units.k_L:
        raise GridTooNarrow(
            f"momentum spread {sigma:.3g} 1/m exceeds {cfg.max_spread_fraction} k_L", field="width_w"
        )
    tail = special.erfc(grid.span_sigma / math.sqrt(2.0))
    if tail > tail_tolerance:
        raise GridTooNarrow(
            f"grid half-width {grid.span_sigma} std clips {tail:.2e} of the norm", field="span_sigma"
        )
    if grid.points < 2:
        raise GridTooNarrow("need at least two kbar points", field="kbar_points")
    half = grid.span_sigma * sigma / units.k_L
    kbar = np.linspace(-half, half, grid.points)
    w = cfg.width_w * units.k_L
    psi0 = np.exp(-(kbar**2) * w**2) * 2**0.25 * math.sqrt(w) * math.pi**-0.25
    amps = np.zeros((2 * grid.ladder_max + 1, grid.points), dtype=complex)
    amps[grid.ladder_max] = psi0
    return LadderWavefunction(
        amplitudes=amps,
        kbar=kbar,
        units=units,
        momentum_offset=units.to_internal(cfg.mean_momentum, "momentum"),
    )


def _spatial_amplitude(state: LadderWavefunction, z: np.ndarray, chunk: int = 1024) -> np.ndarray:
    """psi(z) in internal units by direct summation over (n, kbar)."""
    weights = np.full(state.kbar.size, state.dk)
    if state.kbar.size > 1:
        weights[0] = weights[-1] = 0.5 * state.dk
    weights /= math.sqrt(2.0 * math.pi)
    weighted = state.amplitudes * weights
    out = np.empty(z.size, dtype=complex)
    for start in range(0, z.size, chunk):
        zc = z[start : start + chunk]
        basis = np.exp(1j * np.outer(zc, state.kbar))
        per_order = basis @ weighted.T  # (chunk, orders)
        order_phase = np.exp(1j * np.outer(zc, 2.0 * state.orders))
        out[start : start + chunk] = np.exp(1j * state.momentum_offset * zc) * np.sum(
            per_order * order_phase, axis=1
        )
    return out


def reconstruct_spatial(state: LadderWavefunction, window, num_points: int) -> SpatialDensity:
    """Lab-frame position density |psi(z)|^2 on ``num_points`` points (SI)."""
    state.require_frame(Frame.LAB)
    z_min, z_max = float(window[0]), float(window[1])
    if not z_max > z_min or num_points < 2:
        raise WindowEmpty("spatial window must have z_max > z_min and at least two points")
    positions = np.linspace(z_min, z_max, num_points)
    psi = _spatial_amplitude(state, state.units.to_internal(positions, "length"))
    density = np.abs(psi) ** 2 * state.units.k_L
    return SpatialDensity(positions=positions, density=density)


def observables(state: LadderWavefunction) -> dict:
    """Norm, mean lab momentum (SI) and per-order populations."""
    weights = np.abs(state.amplitudes) ** 2
    pops = _trapezoid(weights, state.dk)
    norm = float(pops.sum())
    k = state.kbar[None, :] + 2.0 * state.orders[:, None] + state.momentum_offset
    mean_k = float(_trapezoid(weights * k, state.dk).sum()) / norm if norm > 0 else 0.0
    return {
        "norm": norm,
        "mean_momentum": state.units.from_internal(mean_k, "momentum"),
        "ladder_populations": dict(zip(state.orders.tolist(), pops.tolist())),
    }


def peak_analysis(
    density: SpatialDensity,
    threshold: float = 1e-4,
    min_prominence: float = 1e-2,
    smoothing: float = 0.0,
    min_mass: float = 0.0,
) -> list[dict]:
    """Segment the density into peaks.

    Regions above ``threshold * max`` are found first; a region holding
    several maxima (prominence above ``min_prominence * max``) is split at
    the lowest point between neighbouring maxima.  ``smoothing`` (m) is the
    std of a Gaussian filter applied before segmentation; it suppresses
    beat fringes of period ``smoothing`` by exp(-2 pi^2).  Masses and
    centroids always use the raw density.  Peaks lighter
    than ``min_mass`` times the total are dropped.  Returns centroid, mass
    and rms width per peak, sorted by centroid.
    """
    rho = np.asarray(density.density)
    z = np.asarray(density.positions)
    if rho.size == 0:
        raise NoPeaksFound("empty density")
    guide = rho
    if smoothing > 0:
        guide = ndimage.gaussian_filter1d(rho, smoothing / density.dz, mode="constant")
    top = float(guide.max())
    if not top > 0:
        raise NoPeaksFound("density is identically zero")
    above = guide >= threshold * top
    edges = np.flatnonzero(np.diff(np.concatenate(([0], above.astype(int), [0]))))
    regions = list(zip(edges[::2], edges[1::2]))
    maxima, _ = signal.find_peaks(np.concatenate(([0.0], guide, [0.0])), prominence=min_prominence * top)
    maxima = maxima - 1
    total = float(rho.sum() * density.dz)
    peaks = []
    for lo, hi in regions:
        inside = [m for m in maxima if lo <= m < hi]
        if not inside:
            inside = [lo + int(np.argmax(guide[lo:hi]))]
        cuts = [lo]
        for left, right in zip(inside[:-1], inside[1:]):
            cuts.append(left + int(np.argmin(guide[left:right + 1])))
        cuts.append(hi)
        for a, b in zip(cuts[:-1], cuts[1:]):
            zs, rs = z[a:b], rho[a:b]
            mass = float(rs.sum() * density.dz)
            if mass <= 0 or mass < min_mass * total:
                continue
            center = float((zs * rs).sum() * density.dz / mass)
            spread = float(math.sqrt(max(((zs - center) ** 2 * rs).sum() * density.dz / mass, 0.0)))
            peaks.append({"center": center, "mass": mass, "width": spread})
    if not peaks:
        raise NoPeaksFound("no region above threshold")
    return sorted(peaks, key=lambda p: p["center"])
