"""Exact and approximate simulation of rotary-echo excitation in a Rydberg gas."""
from .dynamics import (EvolutionConfig, PulseSchedule, PulseSegment, QuantumState,
                       evolve, excitation_curve, ground_state, plain_pulse,
                       rotary_echo_schedule, rydberg_number)
from .ensemble import (CloudSpec, DisorderPlan, LaserNoiseSpec, averaged_observable,
                       sample_cloud, sample_detunings)
from .model import (AtomCloud, DriveParams, InteractionModel, SpinModel, blockade_radius,
                    build_spin_model, diagonal_energies, pair_potential)

__version__ = "0.1.0"

__all__ = [
    "AtomCloud", "CloudSpec", "DisorderPlan", "DriveParams", "EvolutionConfig",
    "InteractionModel", "LaserNoiseSpec", "PulseSchedule", "PulseSegment", "QuantumState",
    "SpinModel", "averaged_observable", "blockade_radius", "build_spin_model",
    "diagonal_energies", "evolve", "excitation_curve", "ground_state", "pair_potential",
    "plain_pulse", "rotary_echo_schedule", "rydberg_number", "sample_cloud",
    "sample_detunings",
]
