"""State-vector propagation of the spin model through piecewise-constant pulses."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .constants import DEFAULT_CAP, DENSE_CAP
from .errors import InvalidInputError, NumericalError
from .model import SpinModel, check_capacity, diagonal_energies, popcounts

NORM_TOL = 1e-9
METHODS = ("split-step", "dense")


@dataclass(frozen=True, eq=False)
class QuantumState:
    amplitudes: np.ndarray
    n_atoms: int

    def __post_init__(self):
        amp = np.array(self.amplitudes, dtype=complex, copy=True)
        if amp.shape != (2 ** self.n_atoms,):
            raise InvalidInputError(
                f"expected {2 ** self.n_atoms} amplitudes for {self.n_atoms} atoms, got {amp.shape}")
        if not np.all(np.isfinite(amp)):
            raise NumericalError("non-finite amplitudes")
        norm = np.vdot(amp, amp).real
        if abs(norm - 1.0) > NORM_TOL:
            raise InvalidInputError(f"state is not normalized (|psi|^2 = {norm!r})")
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)

    def fidelity(self, other: QuantumState) -> float:
        return float(abs(np.vdot(self.amplitudes, other.amplitudes)) ** 2)

    def infidelity(self, other: QuantumState) -> float:
        """``1 - fidelity`` computed as the squared orthogonal component (no cancellation)."""
        a, b = self.amplitudes, other.amplitudes
        perp = b - np.vdot(a, b) * a
        return float(np.vdot(perp, perp).real)


@dataclass(frozen=True)
class PulseSegment:
    duration: float
    amp_factor: float = 1.0
    detuning_offset: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.duration) and self.duration >= 0):
            raise InvalidInputError(f"segment duration must be >= 0, got {self.duration}")
        if not (math.isfinite(self.amp_factor) and math.isfinite(self.detuning_offset)):
            raise InvalidInputError("segment amplitude and detuning must be finite")


@dataclass(frozen=True)
class PulseSchedule:
    segments: tuple

    def __post_init__(self):
        segs = tuple(self.segments)
        if not segs:
            raise InvalidInputError("a schedule needs at least one segment")
        object.__setattr__(self, "segments", segs)

    @property
    def duration(self) -> float:
        return math.fsum(s.duration for s in self.segments)

    def reversed_flipped(self) -> PulseSchedule:
        """Time-reversed schedule with inverted drive sign (undoes an interaction-free drive)."""
        return PulseSchedule(tuple(
            PulseSegment(s.duration, -s.amp_factor, s.detuning_offset)
            for s in reversed(self.segments)))


@dataclass(frozen=True)
class EvolutionConfig:
    method: str = "split-step"
    max_phase_per_step: float = 0.05
    cap: int = DEFAULT_CAP
    dense_cap: int = DENSE_CAP

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidInputError(f"method must be one of {METHODS}, got {self.method!r}")
        if not (0 < self.max_phase_per_step <= 1):
            raise InvalidInputError("max_phase_per_step must lie in (0, 1]")


def plain_pulse(duration: float, amp_factor: float = 1.0) -> PulseSchedule:
    return PulseSchedule((PulseSegment(duration, amp_factor),))


def rotary_echo_schedule(tau: float, tau_p: float) -> PulseSchedule:
    """Drive with +Omega for ``tau_p`` then with -Omega until ``tau``."""
    if not (math.isfinite(tau) and math.isfinite(tau_p)):
        raise InvalidInputError("echo times must be finite")
    if tau < 0 or tau_p < 0:
        raise InvalidInputError("echo times must be non-negative")
    if tau_p > tau:
        raise InvalidInputError(f"tau_p = {tau_p} exceeds tau = {tau}")
    return PulseSchedule((PulseSegment(tau_p, 1.0), PulseSegment(tau - tau_p, -1.0)))


def ground_state(n_atoms: int, cap: int = DEFAULT_CAP) -> QuantumState:
    check_capacity(n_atoms, cap)
    amp = np.zeros(2 ** n_atoms, dtype=complex)
    amp[0] = 1.0
    return QuantumState(amp, n_atoms)


def basis_state(n_atoms: int, code: int) -> QuantumState:
    amp = np.zeros(2 ** n_atoms, dtype=complex)
    amp[code] = 1.0
    return QuantumState(amp, n_atoms)


def rydberg_number(state: QuantumState) -> float:
    prob = np.abs(state.amplitudes) ** 2
    return float(prob @ popcounts(state.n_atoms))


@njit(cache=True, nogil=True)
def _drive(psi, cos_h, sin_h):
    """Apply prod_j exp(-i theta_j/2 sigma_x^j) in place."""
    dim = psi.shape[0]
    for j in range(cos_h.shape[0]):
        s = sin_h[j]
        if s == 0.0:
            continue
        c = cos_h[j]
        bit = 1 << j
        for b in range(dim):
            if b & bit == 0:
                g = psi[b]
                r = psi[b | bit]
                psi[b] = c * g - 1j * s * r
                psi[b | bit] = c * r - 1j * s * g


@njit(cache=True, nogil=True)
def _strang_steps(psi, phase, half_c, half_s, full_c, full_s, n_steps):
    # drive/2, diag, drive/2 per step; interior half-steps merged into full ones
    _drive(psi, half_c, half_s)
    for step in range(n_steps):
        psi *= phase
        if step == n_steps - 1:
            _drive(psi, half_c, half_s)
        else:
            _drive(psi, full_c, full_s)


def split_step_count(model, seg, diag, cfg) -> int:
    scale = max(float(np.max(np.abs(seg.amp_factor * model.site_rabi))),
                float(np.max(np.abs(diag))))
    return max(1, math.ceil(scale * seg.duration / cfg.max_phase_per_step))


def _split_step_segment(psi, model, seg, base_diag, pops, cfg):
    diag = base_diag - seg.detuning_offset * pops
    n_steps = split_step_count(model, seg, diag, cfg)
    dt = seg.duration / n_steps
    theta = seg.amp_factor * model.site_rabi * dt
    _strang_steps(psi, np.exp(-1j * diag * dt),
                  np.cos(theta / 4), np.sin(theta / 4),
                  np.cos(theta / 2), np.sin(theta / 2), n_steps)


def hamiltonian_matrix(model: SpinModel, amp_factor: float = 1.0,
                       detuning_offset: float = 0.0, cap: int = DENSE_CAP) -> np.ndarray:
    """Dense 2**N x 2**N Hamiltonian (rad/s)."""
    n = model.n_atoms
    diag = diagonal_energies(model, cap) - detuning_offset * popcounts(n)
    dim = 2 ** n
    h = np.diag(diag).astype(float)
    codes = np.arange(dim)
    for j, rabi in enumerate(amp_factor * model.site_rabi):
        h[codes, codes ^ (1 << j)] += rabi / 2
    return h


class DensePropagator:
    """Exact propagation by eigendecomposition, cached per (amp_factor, detuning_offset)."""

    def __init__(self, model: SpinModel, cap: int = DENSE_CAP):
        check_capacity(model.n_atoms, cap)
        self.model = model
        self.cap = cap
        self._eig = {}

    def eigensystem(self, amp_factor, detuning_offset):
        key = (float(amp_factor), float(detuning_offset))
        if key not in self._eig:
            h = hamiltonian_matrix(self.model, amp_factor, detuning_offset, self.cap)
            self._eig[key] = np.linalg.eigh(h)
        return self._eig[key]

    def apply(self, psi: np.ndarray, schedule: PulseSchedule) -> np.ndarray:
        for seg in schedule.segments:
            if seg.duration == 0:
                continue
            w, v = self.eigensystem(seg.amp_factor, seg.detuning_offset)
            psi = v @ (np.exp(-1j * w * seg.duration) * (v.conj().T @ psi))
        return psi


def evolve(state: QuantumState, model: SpinModel, schedule: PulseSchedule,
           cfg: EvolutionConfig | None = None, propagator: DensePropagator | None = None
           ) -> QuantumState:
    """Propagate ``state`` through ``schedule``; returns a new state.

    ``propagator`` lets callers reuse a cached dense eigendecomposition across
    calls on the same model (dense method only).
    """
    cfg = cfg or EvolutionConfig()
    if state.n_atoms != model.n_atoms:
        raise InvalidInputError(
            f"state has {state.n_atoms} atoms but model has {model.n_atoms}")
    if cfg.method == "dense":
        prop = propagator if propagator is not None else DensePropagator(model, cfg.dense_cap)
        psi = prop.apply(state.amplitudes.copy(), schedule)
    else:
        psi = state.amplitudes.copy()
        base_diag = diagonal_energies(model, cfg.cap)
        pops = popcounts(model.n_atoms)
        for seg in schedule.segments:
            if seg.duration > 0:
                _split_step_segment(psi, model, seg, base_diag, pops, cfg)
    if not np.all(np.isfinite(psi)):
        raise NumericalError("evolution produced non-finite amplitudes")
    norm = np.vdot(psi, psi).real
    if abs(norm - 1.0) > NORM_TOL:
        raise NumericalError(f"norm drifted to {norm!r} during evolution")
    return QuantumState(psi, state.n_atoms)


def excitation_curve(model: SpinModel, times, cfg: EvolutionConfig | None = None,
                     amp_factor: float = 1.0):
    """``[(t, N_R(t))]`` for plain pulses of each duration, propagated incrementally."""
    times = [float(t) for t in times]
    if any(t < 0 for t in times) or any(b < a for a, b in zip(times, times[1:])):
        raise InvalidInputError("times must be non-negative and sorted ascending")
    cfg = cfg or EvolutionConfig()
    prop = DensePropagator(model, cfg.dense_cap) if cfg.method == "dense" else None
    state = ground_state(model.n_atoms, cfg.cap)
    out = []
    t_prev = 0.0
    for t in times:
        if t > t_prev:
            state = evolve(state, model, plain_pulse(t - t_prev, amp_factor), cfg, prop)
        out.append((t, rydberg_number(state)))
        t_prev = t
    return out
