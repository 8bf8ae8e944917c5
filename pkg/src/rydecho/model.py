"""Driven van der Waals spin model.

Each atom is a two-level system (ground / Rydberg). Basis states are integer
codes in ``[0, 2**N)``; bit ``j`` set means atom ``j`` is excited. In units of
hbar the Hamiltonian is::

    H = sum_j (a * Omega_j / 2) sigma_x^j - Delta * sum_j n_j + sum_{j<k} V_jk n_j n_k

with ``n_j = (1 + sigma_z^j) / 2`` and ``a`` the pulse amplitude factor.
All frequencies are angular (rad/s).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constants import DEFAULT_CAP, DEFAULT_R_MIN
from .errors import CapacityError, InvalidInputError


@dataclass(frozen=True)
class DriveParams:
    rabi: float
    detuning: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.rabi) and np.isfinite(self.detuning)):
            raise InvalidInputError("drive parameters must be finite")
        if self.rabi < 0:
            raise InvalidInputError(f"rabi must be >= 0, got {self.rabi}")


@dataclass(frozen=True)
class InteractionModel:
    """Pair potential ``V(r) = -c6 / max(r, r_min)**6``.

    ``c6`` is C6/hbar in rad s^-1 m^6 and keeps its sign.
    """

    c6: float
    r_min: float = DEFAULT_R_MIN

    def __post_init__(self):
        if not np.isfinite(self.c6):
            raise InvalidInputError("c6 must be finite")
        if not (np.isfinite(self.r_min) and self.r_min > 0):
            raise InvalidInputError(f"r_min must be > 0, got {self.r_min}")


@dataclass(frozen=True, eq=False)
class AtomCloud:
    """Frozen atom positions, shape ``(N, 3)`` in metres.

    ``n_total`` and ``peak_density`` describe the full thermal cloud the
    positions were drawn from; for a subvolume draw ``positions`` hold only
    the atoms inside the box.
    """

    positions: np.ndarray
    n_total: float | None = None
    peak_density: float | None = None
    box: tuple | None = None

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float, copy=True).reshape(-1, 3)
        if len(pos) < 1:
            raise InvalidInputError("a cloud needs at least one atom")
        if not np.all(np.isfinite(pos)):
            raise InvalidInputError("positions must be finite")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @property
    def n_atoms(self) -> int:
        return len(self.positions)

    def translated(self, offset) -> AtomCloud:
        return AtomCloud(self.positions + np.asarray(offset, dtype=float),
                         self.n_total, self.peak_density, self.box)


@dataclass(frozen=True, eq=False)
class SpinModel:
    """Pair-energy table plus drive; ``rabi_scale`` gives per-atom Rabi multipliers."""

    n_atoms: int
    pair_energy: np.ndarray
    drive: DriveParams
    rabi_scale: np.ndarray | None = field(default=None)

    def __post_init__(self):
        v = np.array(self.pair_energy, dtype=float, copy=True)
        n = self.n_atoms
        if v.shape != (n, n):
            raise InvalidInputError(f"pair_energy must be {n}x{n}, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InvalidInputError("pair energies must be finite")
        if not np.array_equal(v, v.T):
            raise InvalidInputError("pair_energy must be symmetric")
        if np.any(np.diag(v) != 0):
            raise InvalidInputError("pair_energy must have a zero diagonal")
        v.setflags(write=False)
        object.__setattr__(self, "pair_energy", v)
        scale = np.ones(n) if self.rabi_scale is None else np.array(self.rabi_scale, dtype=float)
        if scale.shape != (n,) or not np.all(np.isfinite(scale)) or np.any(scale < 0):
            raise InvalidInputError("rabi_scale must be n_atoms finite non-negative values")
        scale.setflags(write=False)
        object.__setattr__(self, "rabi_scale", scale)

    @property
    def site_rabi(self) -> np.ndarray:
        return self.drive.rabi * self.rabi_scale

    def with_drive(self, drive: DriveParams) -> SpinModel:
        return SpinModel(self.n_atoms, self.pair_energy, drive, self.rabi_scale)


def pair_potential(r, model: InteractionModel):
    """Pair energy in rad/s at separation ``r`` (scalar or array)."""
    r_arr = np.asarray(r, dtype=float)
    if not np.all(np.isfinite(r_arr)) or np.any(r_arr <= 0):
        raise InvalidInputError("pair distance must be positive and finite")
    out = -model.c6 / np.maximum(r_arr, model.r_min) ** 6
    return float(out) if out.ndim == 0 else out


def blockade_radius(model: InteractionModel, rabi: float) -> float:
    """Distance at which ``|V(r)| = rabi``: ``(|c6| / rabi) ** (1/6)``."""
    if not (np.isfinite(rabi) and rabi > 0):
        raise InvalidInputError(f"rabi must be > 0, got {rabi}")
    return (abs(model.c6) / rabi) ** (1.0 / 6.0)


def pair_distances(positions: np.ndarray) -> np.ndarray:
    diff = positions[:, None, :] - positions[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def build_spin_model(cloud: AtomCloud, interaction: InteractionModel,
                     drive: DriveParams, rabi_scale=None) -> SpinModel:
    n = cloud.n_atoms
    dist = pair_distances(cloud.positions)
    energy = np.zeros((n, n))
    iu = np.triu_indices(n, k=1)
    if len(iu[0]):
        # coincident atoms have r = 0; the clamp handles them
        r = np.maximum(dist[iu], interaction.r_min)
        energy[iu] = pair_potential(r, interaction)
        energy.T[iu] = energy[iu]
    return SpinModel(n, energy, drive, rabi_scale)


def check_capacity(n_atoms: int, cap: int = DEFAULT_CAP) -> None:
    if n_atoms < 1:
        raise InvalidInputError("need at least one atom")
    if n_atoms > cap:
        raise CapacityError(n_atoms, cap)


def popcounts(n_atoms: int) -> np.ndarray:
    codes = np.arange(2 ** n_atoms, dtype=np.uint64)
    return np.bitwise_count(codes).astype(np.int64)


def diagonal_energies(model: SpinModel, cap: int = DEFAULT_CAP,
                      detuning: float | None = None) -> np.ndarray:
    """Diagonal of H over all basis codes: interaction energy minus ``detuning * popcount``.

    ``detuning`` overrides ``model.drive.detuning`` when given.
    """
    n = model.n_atoms
    check_capacity(n, cap)
    delta = model.drive.detuning if detuning is None else detuning
    v = model.pair_energy
    # Build by doubling: codes with bit j set extend codes < 2**j.
    energies = np.zeros(1)
    for j in range(n):
        field_j = np.zeros(1)
        for k in range(j):
            field_j = np.concatenate([field_j, field_j + v[j, k]])
        energies = np.concatenate([energies, energies + field_j - delta])
    return energies
