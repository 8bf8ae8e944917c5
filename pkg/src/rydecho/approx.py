"""Coarse-grained comparison models: mean-field Bloch equations and superatoms."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import PulseSchedule
from .errors import InvalidInputError, NumericalError
from .model import AtomCloud, DriveParams, InteractionModel, build_spin_model, pair_distances

MAX_PHASE = 0.05


@dataclass(frozen=True, eq=False)
class BlochVectorSet:
    """Per-atom Bloch vectors ``(u, v, w)`` with ``w = 2 rho_ee - 1``; shape ``(N, 3)``."""

    vectors: np.ndarray

    @classmethod
    def ground(cls, n_atoms):
        vec = np.zeros((n_atoms, 3))
        vec[:, 2] = -1.0
        return cls(vec)

    @property
    def excited_population(self) -> np.ndarray:
        return (self.vectors[:, 2] + 1.0) / 2.0

    @property
    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.vectors, axis=1)


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    n_rydberg: np.ndarray
    final: BlochVectorSet | None = None


def _breakpoints(schedule: PulseSchedule, times):
    edges = np.cumsum([0.0] + [s.duration for s in schedule.segments])
    total = edges[-1]
    times = np.asarray(sorted(times) if times is not None else edges, dtype=float)
    if np.any(times < 0) or np.any(times > total * (1 + 1e-12)):
        raise InvalidInputError("requested times must lie within the schedule")
    return edges, np.minimum(times, total)


def _segment_at(edges, t0, t1):
    mid = 0.5 * (t0 + t1)
    return min(int(np.searchsorted(edges, mid, side="right")) - 1, len(edges) - 2)


def meanfield_evolve(cloud: AtomCloud, interaction: InteractionModel, drive: DriveParams,
                     schedule: PulseSchedule, dt: float, times=None) -> Trajectory:
    """Integrate per-atom Bloch equations with interaction-shifted Rydberg energies.

    Atom ``j`` sees its Rydberg level shifted by ``sum_k V_jk rho_ee,k(t)`` on
    top of ``-detuning``, with the same sign convention as the exact model.
    Fixed-step RK4; steps are shortened so that every requested time and
    segment boundary is hit exactly.
    """
    model = build_spin_model(cloud, interaction, drive)
    v = model.pair_energy
    n = model.n_atoms
    max_energy = max(drive.rabi * max(abs(s.amp_factor) for s in schedule.segments),
                     float(np.max(np.abs(drive.detuning + np.abs(v).sum(axis=1)
                                         + max(abs(s.detuning_offset) for s in schedule.segments)))))
    if not (dt > 0 and max_energy * dt <= MAX_PHASE * (1 + 1e-12)):
        raise InvalidInputError(
            f"dt = {dt} too large: max energy * dt must be <= {MAX_PHASE} "
            f"(max energy {max_energy:.4g} rad/s)")

    edges, times = _breakpoints(schedule, times)
    stops = np.unique(np.concatenate([edges, times]))
    state = BlochVectorSet.ground(n).vectors.copy()

    def rhs(r, amp, delta):
        rho = (r[:, 2] + 1.0) / 2.0
        omega = np.empty_like(r)
        omega[:, 0] = amp * drive.rabi
        omega[:, 1] = 0.0
        omega[:, 2] = -delta + v @ rho
        return np.cross(omega, r)

    record = {}
    if stops[0] == 0.0:
        record[0.0] = state.copy()
    for t0, t1 in zip(stops[:-1], stops[1:]):
        seg = schedule.segments[_segment_at(edges, t0, t1)]
        delta = drive.detuning + seg.detuning_offset
        n_steps = max(1, math.ceil((t1 - t0) / dt))
        h = (t1 - t0) / n_steps
        for _ in range(n_steps):
            k1 = rhs(state, seg.amp_factor, delta)
            k2 = rhs(state + 0.5 * h * k1, seg.amp_factor, delta)
            k3 = rhs(state + 0.5 * h * k2, seg.amp_factor, delta)
            k4 = rhs(state + h * k3, seg.amp_factor, delta)
            state = state + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(state)):
            raise NumericalError("mean-field integration produced non-finite values")
        record[t1] = state.copy()

    n_r = np.array([((record[t][:, 2] + 1.0) / 2.0).sum() for t in times])
    return Trajectory(times, n_r, BlochVectorSet(state))


@dataclass(frozen=True, eq=False)
class SuperatomPartition:
    clusters: tuple
    seeds: tuple
    centroids: np.ndarray

    @property
    def sizes(self) -> np.ndarray:
        return np.array([len(c) for c in self.clusters])

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)


def partition_superatoms(cloud: AtomCloud, a_block: float) -> SuperatomPartition:
    """Greedy covering in index order: join the nearest seed within ``a_block``, else seed."""
    if not (math.isfinite(a_block) and a_block > 0):
        raise InvalidInputError(f"a_block must be > 0, got {a_block}")
    pos = cloud.positions
    seeds = []
    members = []
    for i, x in enumerate(pos):
        if seeds:
            d = np.linalg.norm(pos[seeds] - x, axis=1)
            nearest = int(np.argmin(d))
            if d[nearest] <= a_block:
                members[nearest].append(i)
                continue
        seeds.append(i)
        members.append([i])
    clusters = tuple(tuple(m) for m in members)
    centroids = np.array([pos[list(m)].mean(axis=0) for m in clusters])
    return SuperatomPartition(clusters, tuple(seeds), centroids)


def _su2(rabi, delta, t):
    """exp(-i t [rabi/2 sigma_x - delta/2 sigma_z]) for arrays of rabi, shape (..., 2, 2)."""
    rabi = np.asarray(rabi, dtype=float)
    gen = np.hypot(rabi, delta)
    half = gen * t / 2
    c = np.cos(half)
    with np.errstate(invalid="ignore", divide="ignore"):
        sx = np.where(gen > 0, rabi / gen, 0.0) * np.sin(half)
        sz = np.where(gen > 0, -delta / gen, 0.0) * np.sin(half)
    u = np.empty(rabi.shape + (2, 2), dtype=complex)
    # basis order (ground, rydberg); sigma_z = +1 on rydberg
    u[..., 0, 0] = c + 1j * sz
    u[..., 1, 1] = c - 1j * sz
    u[..., 0, 1] = -1j * sx
    u[..., 1, 0] = -1j * sx
    return u


def superatom_evolve(partition: SuperatomPartition, drive: DriveParams,
                     schedule: PulseSchedule, times=None) -> Trajectory:
    """Each cluster is a two-level system driven at ``sqrt(N_c) * rabi``; clusters do not interact."""
    collective = np.sqrt(partition.sizes) * drive.rabi
    edges, times = _breakpoints(schedule, times)
    stops = np.unique(np.concatenate([edges, times]))
    amp = np.zeros((partition.n_clusters, 2), dtype=complex)
    amp[:, 0] = 1.0
    record = {0.0: amp.copy()}
    for t0, t1 in zip(stops[:-1], stops[1:]):
        seg = schedule.segments[_segment_at(edges, t0, t1)]
        u = _su2(seg.amp_factor * collective, drive.detuning + seg.detuning_offset, t1 - t0)
        amp = np.einsum("cij,cj->ci", u, amp)
        record[t1] = amp.copy()
    n_r = np.array([float(np.sum(np.abs(record[t][:, 1]) ** 2)) for t in times])
    return Trajectory(times, n_r)
