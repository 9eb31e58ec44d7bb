"""Single bichromatic pulse on the momentum ladder.

Inside a pulse each kbar column obeys, in the rotating frame,

    i d/dt c_n = n (n w_rec + 2 hbar kbar k_L / m + dw) c_n + g1 g2 (c_{n-1} + c_{n+1})

and the lab-frame amplitudes follow from

    psi_n = exp(-i t (-n dw + g1^2 + g2^2 + hbar kbar^2 / 2m) - i n dtheta) c_n .

The sign of the ``n dw`` and ``n dtheta`` terms is the one that maps the
lab-frame ladder equation (coupling ``exp(i dw t - i dtheta) psi_{n-1}``)
onto the constant-coefficient system above.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy import linalg

from kdi.errors import (
    FrameMismatch,
    NoConvergence,
    NormDrift,
    PopulationOutsideModel,
    TruncationOverflow,
)
from kdi.state import Frame, LadderWavefunction
from kdi.units import ScaledUnits


@dataclass(frozen=True)
class PulseSpec:
    """One rectangular bichromatic pulse (SI units).

    ``g1`` and ``g2`` are in s^-1/2 so their product is an angular
    frequency.  ``delta_omega`` is omega_2 - omega_1 and ``delta_theta``
    theta_2 - theta_1.
    """

    g1: float
    g2: float
    delta_omega: float
    duration: float
    delta_theta: float = 0.0
    ladder_max: int = 5
    max_step: float | None = None
    norm_tolerance: float = 1e-8
    truncation_tolerance: float = 1e-6

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError("pulse duration must be non-negative")
        if self.ladder_max < 1:
            raise ValueError("ladder_max must be at least 1")

    @property
    def coupling(self) -> float:
        return self.g1 * self.g2

    @property
    def light_shift(self) -> float:
        return self.g1**2 + self.g2**2

    def resonance_order(self, omega_rec: float) -> int | None:
        """Integer m with |dw - m w_rec| < 0.1 w_rec, if any."""
        m = round(self.delta_omega / omega_rec)
        return m if abs(self.delta_omega - m * omega_rec) < 0.1 * omega_rec else None

    def with_(self, **changes) -> "PulseSpec":
        return replace(self, **changes)


@dataclass(frozen=True)
class _Internal:
    coupling: float
    light_shift: float
    delta_omega: float
    delta_theta: float
    duration: float


def _internal(pulse: PulseSpec, units: ScaledUnits) -> _Internal:
    f = units.to_internal
    return _Internal(
        coupling=f(pulse.coupling, "frequency"),
        light_shift=f(pulse.light_shift, "frequency"),
        delta_omega=f(pulse.delta_omega, "frequency"),
        delta_theta=pulse.delta_theta,
        duration=f(pulse.duration, "time"),
    )


def _column_kbar(state: LadderWavefunction) -> np.ndarray:
    return state.kbar + state.momentum_offset


def ladder_diagonal(orders: np.ndarray, kbar: np.ndarray, delta_omega: float) -> np.ndarray:
    """Rotating-frame diagonal n (2 n + 2 kbar + dw), internal units, shape (orders, kbar)."""
    n = orders[:, None].astype(float)
    return n * (2.0 * n + 2.0 * kbar[None, :] + delta_omega)


def ladder_hamiltonians(orders, kbar, delta_omega, coupling) -> np.ndarray:
    """Stack of truncated ladder Hamiltonians, one per kbar column: (kbar, M, M)."""
    diag = ladder_diagonal(np.asarray(orders), np.asarray(kbar), delta_omega)
    m = len(orders)
    h = np.zeros((len(kbar), m, m))
    idx = np.arange(m)
    h[:, idx, idx] = diag.T
    h[:, idx[:-1], idx[1:]] = coupling
    h[:, idx[1:], idx[:-1]] = coupling
    return h


def _frame_phase(state: LadderWavefunction, p: _Internal) -> np.ndarray:
    kb = _column_kbar(state)
    n = state.orders[:, None].astype(float)
    t = state.time
    return t * (-n * p.delta_omega + p.light_shift + 0.5 * kb[None, :] ** 2) + n * p.delta_theta


def rotating_frame_map(state: LadderWavefunction, pulse: PulseSpec, direction: str) -> LadderWavefunction:
    """Switch between lab and rotating frame at the state's current time."""
    p = _internal(pulse, state.units)
    phase = _frame_phase(state, p)
    if direction == "to_rotating":
        state.require_frame(Frame.LAB)
        return state.with_amplitudes(state.amplitudes * np.exp(1j * phase), frame=Frame.ROTATING, context=pulse)
    if direction == "to_lab":
        state.require_frame(Frame.ROTATING)
        if state.context is not None and state.context != pulse:
            raise FrameMismatch("rotating frame belongs to a different pulse")
        return state.with_amplitudes(state.amplitudes * np.exp(-1j * phase), frame=Frame.LAB, context=None)
    raise ValueError(f"unknown direction {direction!r}")


def rk4_step_matrix(h_stack: np.ndarray, dt: float) -> np.ndarray:
    """One classical RK4 step for dc/dt = -i H c, written as a matrix.

    The four stages of RK4 applied to a linear constant-coefficient system
    compose to the degree-4 Taylor polynomial of exp(-i H dt).
    """
    a = -1j * dt * h_stack
    eye = np.broadcast_to(np.eye(h_stack.shape[-1]), h_stack.shape)
    a2 = a @ a
    a3 = a2 @ a
    a4 = a3 @ a
    return eye + a + a2 / 2.0 + a3 / 6.0 + a4 / 24.0


def rk4_stages(c: np.ndarray, diag: np.ndarray, coupling: float, dt: float, steps: int) -> np.ndarray:
    """Explicit stage-by-stage RK4 on all columns; reference for the matrix form."""

    def rhs(y):
        out = diag * y
        out[1:] += coupling * y[:-1]
        out[:-1] += coupling * y[1:]
        return -1j * out

    y = c.copy()
    for _ in range(steps):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * dt * k1)
        k3 = rhs(y + 0.5 * dt * k2)
        k4 = rhs(y + dt * k3)
        y = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y


def rk4_schedule(pulse: PulseSpec, state: LadderWavefunction) -> tuple[float, int]:
    """Fixed step and step count for a pulse, internal units."""
    p = _internal(pulse, state.units)
    if p.duration == 0:
        return 0.0, 0
    n_max = state.ladder_max
    diag_max = float(np.abs(ladder_diagonal(state.orders, _column_kbar(state), p.delta_omega)).max())
    bounds = [
        p.duration / 200.0,
        0.02 / (diag_max + 2.0 * abs(p.coupling)),
        0.02 / (2.0 * n_max**2 + abs(p.delta_omega) + abs(p.coupling)),
    ]
    if pulse.max_step is not None:
        bounds.append(state.units.to_internal(pulse.max_step, "time"))
    steps = max(1, math.ceil(p.duration / min(bounds)))
    return p.duration / steps, steps


def evolve_pulse(state: LadderWavefunction, pulse: PulseSpec, method: str = "matrix") -> LadderWavefunction:
    """Propagate a lab-frame state through one pulse with fixed-step RK4.

    ``method="matrix"`` raises the per-column RK4 step matrix to the step
    count by repeated squaring; ``method="stages"`` runs the stages
    explicitly.  Both are the same integrator.
    """
    state.require_frame(Frame.LAB)
    if state.edge_population() > pulse.truncation_tolerance:
        raise TruncationOverflow(
            f"edge orders hold {state.edge_population():.3e} before the pulse; raise ladder_max"
        )
    p = _internal(pulse, state.units)
    if p.duration == 0:
        return state
    dt, steps = rk4_schedule(pulse, state)
    norm_in = state.norm()

    rot = rotating_frame_map(state, pulse, "to_rotating")
    kb = _column_kbar(state)
    if method == "matrix":
        h = ladder_hamiltonians(state.orders, kb, p.delta_omega, p.coupling)
        prop = np.linalg.matrix_power(rk4_step_matrix(h, dt), steps)
        c = np.einsum("kij,jk->ik", prop, rot.amplitudes)
    elif method == "stages":
        diag = ladder_diagonal(state.orders, kb, p.delta_omega)
        c = rk4_stages(rot.amplitudes, diag, p.coupling, dt, steps)
    else:
        raise ValueError(f"unknown method {method!r}")

    rot = rot.with_amplitudes(c, time=state.time + p.duration)
    out = rotating_frame_map(rot, pulse, "to_lab")

    drift = abs(out.norm() - norm_in)
    if drift > pulse.norm_tolerance:
        raise NormDrift(f"norm changed by {drift:.3e} over the pulse")
    edge = out.edge_population()
    if edge > pulse.truncation_tolerance:
        raise TruncationOverflow(
            f"edge orders hold {edge:.3e} after the pulse (ladder_max={state.ladder_max}); raise ladder_max"
        )
    return out


def exact_pulse(state: LadderWavefunction, pulse: PulseSpec) -> LadderWavefunction:
    """Same pulse via the dense matrix exponential of each column's ladder Hamiltonian."""
    state.require_frame(Frame.LAB)
    p = _internal(pulse, state.units)
    rot = rotating_frame_map(state, pulse, "to_rotating")
    h = ladder_hamiltonians(state.orders, _column_kbar(state), p.delta_omega, p.coupling)
    prop = linalg.expm(-1j * p.duration * h)
    c = np.einsum("kij,jk->ik", prop, rot.amplitudes)
    return rotating_frame_map(rot.with_amplitudes(c, time=state.time + p.duration), pulse, "to_lab")


@dataclass(frozen=True)
class TwoLevelModel:
    """H = [[0, coupling], [coupling, detuning]] in rad/s."""

    coupling: float
    detuning: float = 0.0

    @classmethod
    def for_column(cls, coupling: float, kbar: float, units: ScaledUnits) -> "TwoLevelModel":
        """Model for quasimomentum ``kbar`` (1/m): detuning 2 hbar kbar k_L / m."""
        detuning = units.from_internal(2.0 * units.to_internal(kbar, "wavenumber"), "frequency")
        return cls(coupling, detuning)

    def check(self, omega_rec: float, limit: float = 0.25):
        ratio = self.coupling / omega_rec
        if ratio >= limit:
            warnings.warn(f"coupling/recoil = {ratio:.3g}: two-level reduction unreliable", stacklevel=2)
        return ratio

    def transfer_probability(self, t: float) -> float:
        r = math.hypot(self.coupling, 0.5 * self.detuning)
        if r == 0:
            return 0.0
        return (self.coupling / r) ** 2 * math.sin(r * t) ** 2


def two_level_evolution(model: TwoLevelModel, t: float) -> np.ndarray:
    """Closed-form propagator exp(-i H t) of the two-level model."""
    if t < 0:
        raise ValueError("t must be non-negative")
    om, d = model.coupling, model.detuning
    r = math.hypot(om, 0.5 * d)
    global_phase = np.exp(-0.5j * d * t)
    if r == 0:
        return global_phase * np.eye(2, dtype=complex)
    s = math.sin(r * t) / r
    k = np.array([[-0.5 * d, om], [om, 0.5 * d]])
    return global_phase * (math.cos(r * t) * np.eye(2) - 1j * s * k)


class Sign(enum.Enum):
    MINUS = "minus"
    PLUS = "plus"


def splitter_matrix() -> np.ndarray:
    """Instantaneous splitter on (stay, kicked): columns are images of the basis states.

    stay -> (stay + kicked)/sqrt2, kicked -> (-stay + kicked)/sqrt2.
    """
    return np.array([[1.0, -1.0], [1.0, 1.0]]) / math.sqrt(2.0)


def ideal_splitter(
    state: LadderWavefunction,
    sign: str | Sign,
    spectator_tolerance: float = 1e-3,
    allow_spectators: bool = False,
) -> LadderWavefunction:
    """Idealized instantaneous splitter coupling n=0 with n=+1 (minus) or n=-1 (plus).

    Other orders are off resonance.  They must be empty unless
    ``allow_spectators`` is set, in which case they pass through unchanged.
    """
    state.require_frame(Frame.LAB)
    sign = Sign(sign)
    kicked = 1 if sign is Sign.MINUS else -1
    if state.ladder_max < 1:
        raise PopulationOutsideModel("ladder too short for a splitter")
    i0, i1 = state.index(0), state.index(kicked)
    pops = state.populations()
    outside = float(pops.sum() - pops[i0] - pops[i1])
    if outside >= spectator_tolerance and not allow_spectators:
        raise PopulationOutsideModel(f"{outside:.3e} of the norm lies outside the coupled pair")
    u = splitter_matrix()
    amps = state.amplitudes.copy()
    a0, a1 = state.amplitudes[i0], state.amplitudes[i1]
    amps[i0] = u[0, 0] * a0 + u[0, 1] * a1
    amps[i1] = u[1, 0] * a0 + u[1, 1] * a1
    return state.with_amplitudes(amps)


def _column_populations(pulse: PulseSpec, units: ScaledUnits, kbar: float, ladder_max: int) -> np.ndarray:
    p = _internal(pulse, units)
    orders = np.arange(-ladder_max, ladder_max + 1)
    h = ladder_hamiltonians(orders, np.array([units.to_internal(kbar, "wavenumber")]), p.delta_omega, p.coupling)
    c0 = np.zeros(len(orders), dtype=complex)
    c0[ladder_max] = 1.0
    c = linalg.expm(-1j * p.duration * h[0]) @ c0
    return np.abs(c) ** 2


def truncation_convergence(
    pulse: PulseSpec,
    kbar: float,
    units: ScaledUnits,
    tolerance: float = 1e-8,
    limit: int = 64,
    strategy: str = "doubling",
) -> int:
    """Ladder size whose populations agree with a ladder twice as large.

    Starts from n = 0 population in the given column (kbar in 1/m).  Trial
    sizes run 1, 2, 4, ... with ``strategy="doubling"`` and 1, 2, 3, ...
    with ``strategy="increment"``; the latter returns the smallest adequate
    size, the former the first adequate power of two.
    """
    if strategy not in ("doubling", "increment"):
        raise ValueError(f"unknown strategy {strategy!r}")
    n = 1
    while n <= limit:
        if _converged(pulse, units, kbar, n, tolerance):
            return n
        n = 2 * n if strategy == "doubling" else n + 1
    raise NoConvergence(f"ladder populations not converged up to ladder_max={limit}")


def _converged(pulse, units, kbar, n, tolerance) -> bool:
    small = _column_populations(pulse, units, kbar, n)
    big = _column_populations(pulse, units, kbar, 2 * n)
    outside = big[:n].sum() + big[3 * n + 1 :].sum()
    return bool(np.max(np.abs(big[n : 3 * n + 1] - small)) < tolerance and outside < tolerance)

def column_transfer(pulse: PulseSpec, units: ScaledUnits, kbar: float = 0.0) -> float:
    """Population moved out of n = 0 into the resonant neighbour by one pulse.

    Single quasimomentum column ``kbar`` (1/m) starting in n = 0; the
    neighbour is n = +1 for dw < 0 and n = -1 otherwise.
    """
    amps = np.zeros((2 * pulse.ladder_max + 1, 1), dtype=complex)
    amps[pulse.ladder_max, 0] = 1.0
    state = LadderWavefunction(
        amplitudes=amps, kbar=np.array([units.to_internal(kbar, "wavenumber")]), units=units
    )
    out = evolve_pulse(state, pulse)
    kicked = 1 if pulse.delta_omega < 0 else -1
    return float(out.populations()[out.index(kicked)])
