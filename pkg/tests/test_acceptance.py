"""End-to-end acceptance checks; ``pytest`` prints one PASS/FAIL line per criterion."""
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from conftest import RABI, random_model, tight_cluster
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, optimize

from rydecho.analysis import (EchoScan, fit_exponential_decay, fit_parabola, fit_power_law,
                              visibility, visibility_with_error)
from rydecho.cli.config import load_config
from rydecho.cli.experiments import RUNNERS, fixture_paths, read_echo_scan
from rydecho.dynamics import (EvolutionConfig, evolve, ground_state, plain_pulse,
                              rotary_echo_schedule, rydberg_number)
from rydecho.ensemble import CloudSpec, DisorderPlan, LaserNoiseSpec, averaged_observable
from rydecho.model import DriveParams, InteractionModel, SpinModel

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"
TAU = 478e-9
DENSE = EvolutionConfig("dense")
SIGMA_SLOW = 2 * math.pi * 1.5e6


def _run(name):
    cfg = load_config(CONFIGS / f"{name}.toml")
    return RUNNERS[cfg.experiment](cfg, threads=4)


def _detuned_rabi(delta, rabi, t):
    gen = math.hypot(rabi, delta)
    return (rabi / gen) ** 2 * math.sin(gen * t / 2) ** 2


def _monotone_down(values, errors):
    """Each step may rise by at most the combined one-sigma error; overall it must fall."""
    v, e = np.asarray(values), np.asarray(errors)
    steps_ok = np.all(np.diff(v) <= np.hypot(e[1:], e[:-1]))
    return bool(steps_ok and v[-1] < v[0] - math.hypot(e[0], e[-1]))


@pytest.mark.criterion(1, "single-atom Rabi baseline after 478 ns")
def test_single_atom_baseline(record_property):
    model = SpinModel(1, np.zeros((1, 1)), DriveParams(RABI))
    p = rydberg_number(evolve(ground_state(1), model, plain_pulse(TAU)))
    record_property("detail", f"P = {p:.7f}")
    assert abs(p - math.sin(RABI * TAU / 2) ** 2) <= 5e-4
    assert abs(p - 0.0184) <= 5e-4
    assert round(p, 2) == 0.02


@pytest.mark.criterion(2, "detuning-averaged baseline matches quadrature within 10%")
def test_detuning_averaged_baseline(record_property):
    def integrand(delta):
        weight = math.exp(-0.5 * (delta / SIGMA_SLOW) ** 2) / (math.sqrt(2 * math.pi) * SIGMA_SLOW)
        return weight * _detuned_rabi(delta, RABI, TAU)

    # the detuned Rabi response is resonant within a few Rabi widths; split there
    breaks = [-20 * RABI, -3 * RABI, 3 * RABI, 20 * RABI]
    edges = [-10 * SIGMA_SLOW] + breaks + [10 * SIGMA_SLOW]
    expected = sum(integrate.quad(integrand, a, b, limit=400, epsabs=1e-13)[0]
                   for a, b in zip(edges[:-1], edges[1:]))
    avg = averaged_observable(CloudSpec(1, (1e-6,) * 3), LaserNoiseSpec(SIGMA_SLOW, 0.0),
                              DisorderPlan(10_000, 2008), [plain_pulse(TAU)],
                              InteractionModel(0.0), DriveParams(RABI), DENSE, threads=4)
    mc = float(avg.mean[0])
    record_property("detail", f"MC {mc:.5f} +- {avg.stderr[0]:.5f}, quadrature {expected:.5f}")
    assert abs(mc - expected) <= 0.1 * expected
    assert round(mc, 2) == 0.01


@pytest.mark.criterion(3, "echo revival without interactions, N <= 12")
@settings(max_examples=30, deadline=None, derandomize=True)
@given(st.integers(1, 12), st.floats(0.3, 2.5),
       st.lists(st.floats(0.5, 1.2), min_size=12, max_size=12))
def test_echo_revival(n, pulse_area, scales):
    model = SpinModel(n, np.zeros((n, n)), DriveParams(RABI), scales[:n])
    tau = pulse_area / RABI
    n_half = rydberg_number(evolve(ground_state(n), model, rotary_echo_schedule(tau, tau / 2)))
    n_zero = rydberg_number(evolve(ground_state(n), model, rotary_echo_schedule(tau, 0.0)))
    assert n_half <= 1e-8
    vis = visibility(EchoScan(tau, [0.0, tau / 2], [n_zero, n_half]))
    assert abs(vis - 1.0) <= 1e-6


@pytest.mark.criterion(4, "collective sqrt(N) Rabi frequency in a blockaded cluster")
@pytest.mark.parametrize("n", [2, 3, 4])
def test_collective_enhancement(n, record_property):
    spacing = 1e-7
    d_max = spacing / (2 * math.sin(math.pi / n)) * 2 if n > 3 else spacing
    model = tight_cluster(n, spacing, c6=1.01e3 * RABI * d_max ** 6, rabi=RABI)
    off = model.pair_energy[~np.eye(n, dtype=bool)]
    assert np.min(np.abs(off)) >= 1e3 * RABI

    def n_r(t):
        return rydberg_number(evolve(ground_state(n), model, plain_pulse(t), DENSE))

    t_pred = math.pi / (math.sqrt(n) * RABI)
    grid = np.linspace(0, 3 * t_pred, 301)
    curve = np.array([n_r(t) for t in grid])
    first = next(i for i in range(1, len(grid) - 1) if curve[i] >= curve[i - 1] and curve[i] >= curve[i + 1])
    res = optimize.minimize_scalar(lambda t: -n_r(t), bounds=(grid[first - 1], grid[first + 1]),
                                   method="bounded", options={"xatol": 1e-12})
    record_property("detail", f"N={n}: t_max/t_pred = {res.x / t_pred:.5f}, max N_R = {curve.max():.5f}")
    assert abs(res.x / t_pred - 1) <= 0.02
    assert curve.max() <= 1.01


@pytest.mark.criterion(5, "split-step agrees with dense propagator; Strang convergence")
def test_oracle_equivalence(record_property):
    schedule = rotary_echo_schedule(2 * math.pi / RABI, 0.7 * math.pi / RABI)
    worst = 0.0
    for seed in range(20):
        model = random_model(8, 100 + seed, rabi=RABI, a_block=1e-6)
        split = evolve(ground_state(8), model, schedule)
        exact = evolve(ground_state(8), model, schedule, DENSE)
        worst = max(worst, exact.infidelity(split))
    ratios = []
    for seed in range(3):
        model = random_model(8, 200 + seed, rabi=1.0)
        sched = rotary_echo_schedule(3.0, 1.2)
        exact = evolve(ground_state(8), model, sched, DENSE)
        errs = [exact.infidelity(evolve(ground_state(8), model, sched, EvolutionConfig(max_phase_per_step=h)))
                for h in (0.4, 0.2)]
        ratios.append(errs[0] / errs[1])
    record_property("detail", f"worst 1-F = {worst:.2e}, halving ratios {', '.join(f'{r:.1f}' for r in ratios)}")
    assert worst <= 1e-8
    assert min(ratios) >= 3


@pytest.mark.criterion(6, "blockade suppression: sub-linear exponent, falling with C6")
@pytest.mark.slow
def test_blockade_scaling(record_property):
    weak = _run("blockade-weak").results["power_law"]["exponent"]
    strong = _run("blockade-strong").results["power_law"]["exponent"]
    record_property("detail", f"exponent {weak:.3f} (C6) -> {strong:.3f} (10 C6)")
    assert 0 < weak < 1 and 0 < strong < 1
    assert strong < weak


@pytest.mark.criterion(7, "echo visibility falls with density and with pulse length")
@pytest.mark.slow
def test_dephasing_trend(record_property):
    dens = _run("dephasing-density")
    cols = ["n_atoms_total", "peak_density_m3", "n_atoms_box_mean", "n_r_mean", "n_r_stderr",
            "visibility", "visibility_stderr"]
    rows = np.array([[float(x) for x in r] for r in dens.rows])
    v_n, e_n = rows[:, cols.index("visibility")], rows[:, cols.index("visibility_stderr")]
    taus = _run("dephasing-tau")
    v_t = np.array([r[1] for r in taus.rows])
    e_t = np.array([r[2] for r in taus.rows])
    d_fit = dens.results["visibility_decay"]
    t_fit = taus.results["visibility_decay"]
    record_property("detail", "V(n) " + " ".join(f"{v:.4f}" for v in v_n)
                    + "; V(tau) " + " ".join(f"{v:.4f}" for v in v_t)
                    + f"; decay {t_fit['dephasing_time_ns']:.0f} ns")
    assert _monotone_down(v_n, e_n)
    assert _monotone_down(v_t, e_t)
    for fit, key in ((d_fit, "decay_density_m3"), (t_fit, "decay_s")):
        assert fit["converged"] and not fit["flags"]
        assert 0 < fit[key] < math.inf


@pytest.mark.criterion(8, "fitter round-trips and bundled-fixture visibilities")
def test_analysis_round_trips(record_property):
    tp = np.linspace(0, TAU, 11)
    par = fit_parabola(EchoScan(TAU, tp, 3.2e12 * (tp - TAU / 2) ** 2 + 0.05))
    assert par.params["a"] == pytest.approx(3.2e12, rel=1e-9)
    assert par.params["c"] == pytest.approx(0.05, rel=1e-9)

    x = np.linspace(300e-9, 2500e-9, 12)
    exp = fit_exponential_decay(list(zip(x, 0.95 * np.exp(-x / 860e-9))))
    assert exp.params["decay"] == pytest.approx(860e-9, rel=1e-9)
    assert exp.params["amplitude"] == pytest.approx(0.95, rel=1e-9)

    n = np.geomspace(1e6, 1.1e7, 8)
    law = fit_power_law(list(zip(n, 4.0 * n ** 0.43)))
    assert law.params["exponent"] == pytest.approx(0.43, rel=1e-9)
    assert law.params["prefactor"] == pytest.approx(4.0, rel=1e-9)

    found = []
    for path, (target, err) in zip(fixture_paths(), [(0.47, 0.08), (0.48, 0.05), (0.29, 0.06)]):
        vis, _ = visibility_with_error(fit_parabola(read_echo_scan(path)[0]))
        found.append(vis)
        assert abs(vis - target) <= err
    record_property("detail", "fixtures " + " ".join(f"{v:.3f}" for v in found))


@pytest.mark.criterion(9, "same seed, different thread counts: byte-identical CSV")
def test_thread_determinism(tmp_path, record_property):
    outputs = []
    for threads in (1, 4):
        out = tmp_path / f"t{threads}"
        proc = subprocess.run(
            [sys.executable, "-m", "rydecho", "echo", "--config", str(CONFIGS / "echo.toml"),
             "--threads", str(threads), "--out", str(out)],
            capture_output=True, text=True, check=False)
        assert proc.returncode == 0, proc.stderr
        outputs.append((out / "echo.csv").read_bytes())
    record_property("detail", f"{len(outputs[0])} bytes")
    assert outputs[0] == outputs[1]
