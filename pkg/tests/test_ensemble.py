import math

import numpy as np
import pytest

from rydecho.dynamics import EvolutionConfig, plain_pulse, rotary_echo_schedule
from rydecho.ensemble import (QUIET, CloudSpec, DisorderPlan, LaserNoiseSpec, averaged_observable,
                              box_fraction, centered_box, realization_rng, sample_cloud,
                              sample_detunings)
from rydecho.errors import CapacityError, ConfigError
from rydecho.model import DriveParams, InteractionModel

RABI = 2 * math.pi * 90.5e3
TAU = 478e-9


def test_cloud_sample_statistics():
    cloud = sample_cloud(CloudSpec(10_000, (1.0, 1.0, 1.0)), realization_rng(1, 0))
    pos = cloud.positions
    # standard error of the mean is 0.01, of the std about 0.007
    assert np.all(np.abs(pos.mean(axis=0)) < 0.05)
    assert np.all((pos.std(axis=0) > 0.97) & (pos.std(axis=0) < 1.03))


def test_single_atom_cloud():
    assert sample_cloud(CloudSpec(1, (1e-6,) * 3), realization_rng(0, 0)).n_atoms == 1


def test_cloud_is_deterministic_per_seed():
    spec = CloudSpec(50, (1e-6, 2e-6, 3e-6))
    a = sample_cloud(spec, realization_rng(42, 3)).positions
    b = sample_cloud(spec, realization_rng(42, 3)).positions
    c = sample_cloud(spec, realization_rng(42, 4)).positions
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_peak_density_formula_and_linearity():
    spec = CloudSpec(1.1e7, (10e-6, 10e-6, 40e-6))
    assert spec.peak_density == pytest.approx(1.1e7 / ((2 * math.pi) ** 1.5 * 4e-15))
    for f in (0.1, 0.3, 2.5):
        assert spec.scaled(f).peak_density == pytest.approx(f * spec.peak_density, rel=1e-15)


def test_widths_from_temperature():
    spec = CloudSpec.from_temperature(1e6, 3.8e-6, [2 * math.pi * 20, 2 * math.pi * 20, 2 * math.pi * 200])
    # sqrt(kT/m)/omega for Rb-87 at 3.8 uK is about 19 um / 2pi*20 Hz scale
    assert spec.sigma[0] == pytest.approx(spec.sigma[1])
    assert spec.sigma[0] / spec.sigma[2] == pytest.approx(10.0)
    assert 1e-5 < spec.sigma[0] < 1e-3


def test_subvolume_sampling_counts_and_bounds():
    spec = CloudSpec(1e6, (10e-6, 10e-6, 40e-6))
    box = centered_box((4e-6, 4e-6, 4e-6))
    cloud = sample_cloud(spec, realization_rng(0, 0), box)
    assert cloud.n_atoms == round(1e6 * box_fraction(spec, box))
    lo, hi = np.array(box[0]), np.array(box[1])
    assert np.all((cloud.positions >= lo) & (cloud.positions <= hi))


def test_subvolume_density_tracks_atom_number():
    spec = CloudSpec(1.0, (10e-6, 10e-6, 40e-6))
    box = centered_box((4e-6, 4e-6, 4e-6))
    frac = box_fraction(spec, box)
    counts = [sample_cloud(spec.scaled(k / frac), realization_rng(0, 0), box).n_atoms for k in (2, 4, 8)]
    assert counts == [2, 4, 8]


def test_subvolume_far_in_tail_is_a_config_error():
    spec = CloudSpec(1e6, (1e-6, 1e-6, 1e-6))
    box = centered_box((1e-6, 1e-6, 1e-6), center=(8e-6, 0, 0))
    with pytest.raises(ConfigError, match="acceptance"):
        sample_cloud(spec, realization_rng(0, 0), box)


def test_detunings_zero_noise():
    slow, fast = sample_detunings(QUIET, 5, realization_rng(0, 0))
    assert slow == 0 and np.all(fast == 0)


def test_slow_detuning_width():
    noise = LaserNoiseSpec()
    draws = np.array([sample_detunings(noise, 1, realization_rng(7, i))[0] for i in range(100_000)])
    # relative standard error of a sample std over 1e5 draws is 0.22 %
    assert draws.std() == pytest.approx(2 * math.pi * 1.5e6, rel=0.01)


def test_detunings_reproducible():
    a = sample_detunings(LaserNoiseSpec(), 4, realization_rng(5, 1))
    b = sample_detunings(LaserNoiseSpec(), 4, realization_rng(5, 1))
    assert a[0] == b[0]
    np.testing.assert_array_equal(a[1], b[1])


def test_noninteracting_average_is_exact():
    spec = CloudSpec(3, (1e-6,) * 3)
    avg = averaged_observable(spec, QUIET, DisorderPlan(4, 1), [plain_pulse(TAU)],
                              InteractionModel(0.0), DriveParams(RABI))
    assert avg.mean[0] == pytest.approx(3 * math.sin(RABI * TAU / 2) ** 2, abs=1e-12)
    assert avg.stderr[0] == pytest.approx(0.0, abs=1e-15)


def test_blockaded_cluster_never_exceeds_one_excitation():
    spec = CloudSpec(6, (20e-9,) * 3)  # all pairs inside r_min
    interaction = InteractionModel(RABI * (5e-6) ** 6, r_min=100e-9)
    times = np.linspace(0, 3e-6, 7)
    avg = averaged_observable(spec, LaserNoiseSpec(), DisorderPlan(5, 3),
                              [plain_pulse(t) for t in times], interaction, DriveParams(RABI),
                              EvolutionConfig("dense"))
    assert np.all(avg.samples <= 1 + 1e-9)


def test_stderr_scales_with_realizations():
    spec = CloudSpec(1, (1e-6,) * 3)
    noise = LaserNoiseSpec(2 * math.pi * 1.5e6, 0.0)
    kwargs = dict(protocol=[plain_pulse(TAU)], interaction=InteractionModel(0.0),
                  drive=DriveParams(RABI), cfg=EvolutionConfig("dense"))
    small = averaged_observable(spec, noise, DisorderPlan(200, 1), **kwargs).stderr[0]
    large = averaged_observable(spec, noise, DisorderPlan(2000, 2), **kwargs).stderr[0]
    assert 2.4 < small / large < 4.0  # sqrt(10) = 3.16


def test_thread_count_does_not_change_results():
    box = centered_box((4e-6,) * 3)
    spec = CloudSpec(1.0, (10e-6, 10e-6, 40e-6))
    spec = spec.scaled(6 / box_fraction(spec, box))
    plan = DisorderPlan(6, 99, box)
    protocol = [rotary_echo_schedule(TAU, t) for t in np.linspace(0, TAU, 4)]
    args = (spec, LaserNoiseSpec(), plan, protocol, InteractionModel(RABI * (3e-6) ** 6),
            DriveParams(RABI), EvolutionConfig("dense"))
    one = averaged_observable(*args, threads=1)
    three = averaged_observable(*args, threads=3)
    assert one.mean.tobytes() == three.mean.tobytes()
    assert one.stderr.tobytes() == three.stderr.tobytes()


def test_capacity_failure_aborts_run():
    spec = CloudSpec(1e6, (10e-6, 10e-6, 40e-6))
    plan = DisorderPlan(2, 0, centered_box((8e-6,) * 3))
    with pytest.raises(CapacityError):
        averaged_observable(spec, QUIET, plan, [plain_pulse(TAU)], InteractionModel(1e-30),
                            DriveParams(RABI), EvolutionConfig(cap=6))
