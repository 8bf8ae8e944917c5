"""Disorder realizations: thermal cloud positions, shot-to-shot laser detuning, averaging."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .constants import K_B, M_RB87, SIGMA_FAST, SIGMA_SLOW
from .dynamics import (DensePropagator, EvolutionConfig, PulseSchedule, evolve,
                       ground_state, rydberg_number)
from .errors import CapacityError, ConfigError, InvalidInputError
from .model import AtomCloud, DriveParams, InteractionModel, build_spin_model

MIN_ACCEPTANCE = 1e-4


@dataclass(frozen=True)
class CloudSpec:
    """Gaussian density profile of a thermal cloud with ``n_atoms`` ground-state atoms."""

    n_atoms: float
    sigma: tuple

    def __post_init__(self):
        sigma = tuple(float(s) for s in self.sigma)
        if len(sigma) != 3 or not all(math.isfinite(s) and s > 0 for s in sigma):
            raise InvalidInputError(f"sigma must be three positive widths, got {self.sigma}")
        if not (math.isfinite(self.n_atoms) and self.n_atoms >= 1):
            raise InvalidInputError(f"n_atoms must be >= 1, got {self.n_atoms}")
        object.__setattr__(self, "sigma", sigma)

    @classmethod
    def from_temperature(cls, n_atoms, temperature, trap_frequencies, mass=M_RB87):
        """Widths ``sqrt(k_B T / (m omega_i^2))`` from trap angular frequencies."""
        if temperature <= 0 or any(w <= 0 for w in trap_frequencies):
            raise InvalidInputError("temperature and trap frequencies must be positive")
        sigma = tuple(math.sqrt(K_B * temperature / (mass * w ** 2)) for w in trap_frequencies)
        return cls(n_atoms, sigma)

    @property
    def peak_density(self) -> float:
        sx, sy, sz = self.sigma
        return self.n_atoms / ((2 * math.pi) ** 1.5 * sx * sy * sz)

    def scaled(self, factor: float) -> CloudSpec:
        """Same geometry, ``factor`` times the atoms (a partial hyperfine transfer)."""
        return CloudSpec(self.n_atoms * factor, self.sigma)


@dataclass(frozen=True)
class LaserNoiseSpec:
    sigma_slow: float = SIGMA_SLOW
    sigma_fast: float = SIGMA_FAST

    def __post_init__(self):
        for name in ("sigma_slow", "sigma_fast"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise InvalidInputError(f"{name} must be >= 0, got {v}")


QUIET = LaserNoiseSpec(0.0, 0.0)


@dataclass(frozen=True)
class DisorderPlan:
    """``subvolume`` is an axis-aligned box ``((x0, y0, z0), (x1, y1, z1))`` in metres."""

    n_realizations: int = 5
    seed: int = 0
    subvolume: tuple | None = None

    def __post_init__(self):
        if int(self.n_realizations) < 1:
            raise InvalidInputError("n_realizations must be >= 1")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise InvalidInputError("seed must be an unsigned 64-bit integer")
        if self.subvolume is not None:
            lo, hi = (tuple(float(x) for x in c) for c in self.subvolume)
            if len(lo) != 3 or len(hi) != 3 or not all(a < b for a, b in zip(lo, hi)):
                raise InvalidInputError(f"invalid subvolume {self.subvolume}")
            object.__setattr__(self, "subvolume", (lo, hi))


def centered_box(edges, center=(0.0, 0.0, 0.0)):
    lo = tuple(c - e / 2 for c, e in zip(center, edges))
    hi = tuple(c + e / 2 for c, e in zip(center, edges))
    return lo, hi


def realization_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based stream for one realization; independent of execution order."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(index)])))


def box_fraction(spec: CloudSpec, box) -> float:
    """Probability mass of the Gaussian cloud inside ``box``."""
    lo, hi = box
    frac = 1.0
    for a, b, s in zip(lo, hi, spec.sigma):
        frac *= 0.5 * (erf(b / (math.sqrt(2) * s)) - erf(a / (math.sqrt(2) * s)))
    return frac


def expected_box_count(spec: CloudSpec, box) -> float:
    return spec.n_atoms * box_fraction(spec, box)


def sample_cloud(spec: CloudSpec, rng: np.random.Generator, subvolume=None) -> AtomCloud:
    """Draw atom positions from the Gaussian profile, optionally conditioned on a box.

    With a box, the atom count is the expected number inside it, rounded.
    """
    sigma = np.asarray(spec.sigma)
    if subvolume is None:
        n = int(round(spec.n_atoms))
        pos = rng.normal(0.0, sigma, size=(n, 3))
        return AtomCloud(pos, spec.n_atoms, spec.peak_density, None)

    frac = box_fraction(spec, subvolume)
    if frac < MIN_ACCEPTANCE:
        raise ConfigError(
            f"subvolume acceptance rate {frac:.3g} is below {MIN_ACCEPTANCE:g}; "
            "the box sits too far in the tail of the cloud")
    n = int(round(spec.n_atoms * frac))
    if n < 1:
        raise ConfigError(
            f"subvolume holds {spec.n_atoms * frac:.3g} atoms on average; need at least 1")
    lo, hi = (np.asarray(c) for c in subvolume)
    accepted = []
    have = 0
    batch = max(64, int(2 * n / frac))
    while have < n:
        trial = rng.normal(0.0, sigma, size=(batch, 3))
        keep = trial[np.all((trial >= lo) & (trial <= hi), axis=1)]
        accepted.append(keep)
        have += len(keep)
    pos = np.concatenate(accepted)[:n]
    return AtomCloud(pos, spec.n_atoms, spec.peak_density, (tuple(lo), tuple(hi)))


def sample_detunings(noise: LaserNoiseSpec, n_points: int, rng: np.random.Generator):
    """One slow offset per realization plus independent fast jitter per protocol point."""
    if n_points < 1:
        raise InvalidInputError("n_points must be >= 1")
    slow = float(rng.normal(0.0, noise.sigma_slow))
    fast = rng.normal(0.0, noise.sigma_fast, size=n_points)
    return slow, fast


@dataclass(frozen=True, eq=False)
class ObservableAverage:
    """Per-point mean and standard error of N_R; ``samples`` has one row per realization."""

    mean: np.ndarray
    stderr: np.ndarray
    samples: np.ndarray
    atom_counts: np.ndarray


def _realize(index, spec, noise, plan, protocol, interaction, drive, cfg):
    rng = realization_rng(plan.seed, index)
    cloud = sample_cloud(spec, rng, plan.subvolume)
    if cloud.n_atoms > cfg.cap:
        raise CapacityError(cloud.n_atoms, cfg.cap)
    slow, fast = sample_detunings(noise, len(protocol), rng)
    base = build_spin_model(cloud, interaction, drive)
    start = ground_state(cloud.n_atoms, cfg.cap)
    cache = {}
    out = np.empty(len(protocol))
    for i, schedule in enumerate(protocol):
        delta = drive.detuning + slow + fast[i]
        if delta not in cache:
            model = base.with_drive(DriveParams(drive.rabi, delta))
            prop = DensePropagator(model, cfg.dense_cap) if cfg.method == "dense" else None
            cache[delta] = (model, prop)
        model, prop = cache[delta]
        out[i] = rydberg_number(evolve(start, model, schedule, cfg, prop))
    return out, cloud.n_atoms


def averaged_observable(spec: CloudSpec, noise: LaserNoiseSpec, plan: DisorderPlan,
                        protocol, interaction: InteractionModel, drive: DriveParams,
                        cfg: EvolutionConfig | None = None, threads: int = 1
                        ) -> ObservableAverage:
    """Average N_R over disorder realizations for each schedule in ``protocol``.

    Every realization draws a fresh cloud and detuning set from its own
    seeded stream, so results do not depend on ``threads``. A failing
    realization propagates its exception.
    """
    cfg = cfg or EvolutionConfig()
    protocol = list(protocol)
    if not protocol or not all(isinstance(p, PulseSchedule) for p in protocol):
        raise InvalidInputError("protocol must be a non-empty list of PulseSchedule")
    if plan.subvolume is None and round(spec.n_atoms) > cfg.cap:
        raise CapacityError(int(round(spec.n_atoms)), cfg.cap)

    def work(i):
        return _realize(i, spec, noise, plan, protocol, interaction, drive, cfg)

    indices = range(int(plan.n_realizations))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, indices))
    else:
        results = [work(i) for i in indices]

    samples = np.stack([r[0] for r in results])
    counts = np.array([r[1] for r in results])
    n = len(samples)
    mean = samples.mean(axis=0)
    stderr = samples.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros_like(mean)
    return ObservableAverage(mean, stderr, samples, counts)
