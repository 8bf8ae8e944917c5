"""Experiment drivers behind the CLI subcommands.

Each driver returns an :class:`Outcome`: a CSV table, scalar results for the
manifest and an optional curve to plot.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from ..analysis import (EchoScan, fit_exponential_decay, fit_parabola, fit_power_law,
                        visibility, visibility_with_error)
from ..dynamics import plain_pulse, rotary_echo_schedule
from ..ensemble import averaged_observable
from ..errors import ConfigError, DegenerateDataError, UndefinedVisibilityError
from .config import RunConfig
from .io import read_csv

FIXTURES = ("echo_ng_1.0e6.csv", "echo_ng_3.3e6.csv", "echo_ng_1.0e7.csv")


@dataclass
class Outcome:
    columns: list
    rows: list
    meta: dict = field(default_factory=dict)
    results: dict = field(default_factory=dict)
    plot: dict | None = None


def _average(cfg: RunConfig, protocol, n_atoms=None, threads=1):
    return averaged_observable(cfg.cloud_spec(n_atoms), cfg.noise(), cfg.plan(), protocol,
                               cfg.interaction(), cfg.drive(), cfg.evolution(), threads)


def _echo_summary(scan: EchoScan) -> dict:
    fit = fit_parabola(scan)
    try:
        vis, vis_se = visibility_with_error(fit)
    except UndefinedVisibilityError:
        vis, vis_se = float("nan"), float("nan")
    try:
        raw = visibility(scan)
    except UndefinedVisibilityError:
        raw = float("nan")
    return {"fit": fit, "visibility": vis, "visibility_stderr": vis_se, "visibility_raw": raw}


def simulate_echo(cfg: RunConfig, tau: float, tau_p=None, n_atoms=None, threads=1):
    tau_p = cfg.tau_p_grid(tau) if tau_p is None else np.asarray(tau_p)
    protocol = [rotary_echo_schedule(tau, min(t, tau)) for t in tau_p]
    avg = _average(cfg, protocol, n_atoms, threads)
    return EchoScan(tau, tau_p, avg.mean, avg.stderr), avg


def run_rabi(cfg: RunConfig, threads=1) -> Outcome:
    pulse = cfg["pulse"]
    times = np.linspace(0.0, pulse["t_max_ns"] * 1e-9, pulse["n_times"])
    avg = _average(cfg, [plain_pulse(t) for t in times], threads=threads)
    rows = [(t * 1e9, m, s) for t, m, s in zip(times, avg.mean, avg.stderr)]
    peak = int(np.argmax(avg.mean))
    return Outcome(
        ["t_ns", "n_r_mean", "n_r_stderr"], rows,
        meta={"atoms_mean": float(avg.atom_counts.mean())},
        results={"n_r_max": float(avg.mean[peak]), "t_at_max_ns": float(times[peak] * 1e9),
                 "atoms_mean": float(avg.atom_counts.mean())},
        plot={"x": times * 1e9, "y": avg.mean, "yerr": avg.stderr,
              "xlabel": "pulse length (ns)", "ylabel": "Rydberg number"},
    )


def run_echo(cfg: RunConfig, threads=1) -> Outcome:
    tau = cfg.tau
    scan, avg = simulate_echo(cfg, tau, cfg.tau_p_grid(), threads=threads)
    summary = _echo_summary(scan)
    fit = summary["fit"]
    rows = [(tp * 1e9, m, s) for tp, m, s in zip(scan.tau_p, scan.n_r_mean, scan.n_r_stderr)]
    grid = np.linspace(0.0, tau, 101)
    return Outcome(
        ["tau_p_ns", "n_r_mean", "n_r_stderr"], rows,
        meta={"tau_ns": tau * 1e9},
        results={"tau_ns": tau * 1e9, "visibility": summary["visibility"],
                 "visibility_stderr": summary["visibility_stderr"],
                 "visibility_raw": summary["visibility_raw"],
                 "parabola": {"a_per_ns2": fit.params["a"] * 1e-18, "c": fit.params["c"]},
                 "atoms_mean": float(avg.atom_counts.mean())},
        plot={"x": scan.tau_p * 1e9, "y": scan.n_r_mean, "yerr": scan.n_r_stderr,
              "fit_x": grid * 1e9, "fit_y": fit.predict(grid),
              "xlabel": "phase flip time (ns)", "ylabel": "Rydberg number"},
    )


def run_scan_density(cfg: RunConfig, threads=1) -> Outcome:
    """Rydberg number (plain pulse) and echo visibility per total atom number.

    Every density reuses the same realization seeds, so differences between
    rows are not swamped by independent sampling noise.
    """
    tau = cfg.tau
    with_echo = cfg["scan"]["with_echo"]
    tau_p = cfg.tau_p_grid(tau) if with_echo else np.array([])
    protocol = [plain_pulse(tau)] + [rotary_echo_schedule(tau, t) for t in tau_p]
    rows, scaling, vis_points = [], [], []
    for n_total in cfg["scan"]["n_atoms_grid"]:
        spec = cfg.cloud_spec(n_total)
        avg = _average(cfg, protocol, n_total, threads)
        vis = vis_se = float("nan")
        if with_echo:
            scan = EchoScan(tau, tau_p, avg.mean[1:], avg.stderr[1:])
            summary = _echo_summary(scan)
            vis, vis_se = summary["visibility"], summary["visibility_stderr"]
            vis_points.append((spec.peak_density, vis, vis_se))
        rows.append((n_total, spec.peak_density, float(avg.atom_counts.mean()),
                     avg.mean[0], avg.stderr[0], vis, vis_se))
        scaling.append((spec.peak_density, avg.mean[0]))

    results = {"tau_ns": tau * 1e9}
    law = fit_power_law(scaling)
    results["power_law"] = {"exponent": law.params["exponent"],
                            "exponent_stderr": law.stderrs["exponent"],
                            "prefactor": law.params["prefactor"]}
    if len(vis_points) >= 3:
        results["visibility_decay"] = _decay_summary(vis_points, "decay_density_m3")
    xs = np.array([r[1] for r in rows])
    return Outcome(
        ["n_atoms_total", "peak_density_m3", "n_atoms_box_mean", "n_r_mean", "n_r_stderr",
         "visibility", "visibility_stderr"], rows,
        meta={"tau_ns": tau * 1e9},
        results=results,
        plot={"x": xs, "y": np.array([r[3] for r in rows]), "yerr": np.array([r[4] for r in rows]),
              "fit_x": xs, "fit_y": law.predict(xs), "log": True,
              "xlabel": "peak density (m^-3)", "ylabel": "Rydberg number"},
    )


def _decay_summary(points, decay_key):
    try:
        fit = fit_exponential_decay(points)
    except DegenerateDataError as exc:
        return {"error": str(exc)}
    return {"amplitude": fit.params["amplitude"], decay_key: fit.params["decay"],
            f"{decay_key}_stderr": fit.stderrs["decay"], "converged": fit.converged,
            "flags": sorted(fit.flags)}


def run_scan_tau(cfg: RunConfig, threads=1) -> Outcome:
    rows, points = [], []
    for tau_ns in cfg["pulse"]["tau_list_ns"]:
        tau = tau_ns * 1e-9
        scan, _ = simulate_echo(cfg, tau, threads=threads)
        summary = _echo_summary(scan)
        rows.append((tau_ns, summary["visibility"], summary["visibility_stderr"],
                     summary["visibility_raw"], scan.value_at(0.0), scan.value_at(tau / 2)))
        points.append((tau, summary["visibility"], summary["visibility_stderr"]))
    results = {"peak_density_m3": cfg.cloud_spec().peak_density}
    decay = _decay_summary(points, "decay_s")
    if "decay_s" in decay:
        decay["dephasing_time_ns"] = decay["decay_s"] * 1e9
    results["visibility_decay"] = decay
    taus = np.array([r[0] for r in rows])
    return Outcome(
        ["tau_ns", "visibility", "visibility_stderr", "visibility_raw", "n_r_at_0",
         "n_r_at_half"], rows,
        meta={"peak_density_m3": results["peak_density_m3"]},
        results=results,
        plot={"x": taus, "y": np.array([r[1] for r in rows]),
              "yerr": np.array([r[2] for r in rows]),
              "xlabel": "pulse length (ns)", "ylabel": "visibility"},
    )


def fixture_paths():
    base = resources.files("rydecho") / "data"
    return [Path(str(base / name)) for name in FIXTURES]


def _numeric(path, rows, width):
    try:
        arr = np.array([r[:width] for r in rows], dtype=float)
    except ValueError as exc:
        raise ConfigError(f"{path}: non-numeric data ({exc})") from exc
    if arr.ndim != 2 or len(arr) == 0 or arr.shape[1] < 2:
        raise ConfigError(f"{path}: expected at least two numeric columns")
    return arr


def read_echo_scan(path) -> tuple[EchoScan, dict]:
    meta, columns, rows = read_csv(path)
    if "tau_ns" not in meta:
        raise ConfigError(f"{path}: echo scan needs a '# tau_ns = ...' header line")
    arr = _numeric(path, rows, 3)
    scan = EchoScan(float(meta["tau_ns"]) * 1e-9, arr[:, 0] * 1e-9, arr[:, 1],
                    arr[:, 2] if arr.shape[1] > 2 else None)
    return scan, meta


def run_fit(cfg: RunConfig, threads=1) -> Outcome:
    kind = cfg["fit"]["kind"]
    inputs = [Path(p) for p in cfg["fit"]["inputs"]]
    if kind == "echo":
        inputs = inputs or fixture_paths()
        rows, results = [], {"scans": []}
        for path in inputs:
            scan, meta = read_echo_scan(path)
            summary = _echo_summary(scan)
            fit = summary["fit"]
            n_g = float(meta.get("n_ground", "nan"))
            rows.append((path.name, n_g, scan.tau * 1e9, summary["visibility"],
                         summary["visibility_stderr"], fit.params["a"] * 1e-18, fit.params["c"]))
            results["scans"].append({"source": path.name, "n_ground": n_g,
                                     "visibility": summary["visibility"],
                                     "visibility_stderr": summary["visibility_stderr"]})
        return Outcome(["source", "n_ground", "tau_ns", "visibility", "visibility_stderr",
                        "a_per_ns2", "c"], rows, results=results)

    if len(inputs) != 1:
        raise ConfigError(f"fit.kind = {kind!r} needs exactly one input file")
    _, columns, data = read_csv(inputs[0])
    arr = _numeric(inputs[0], data, 3)
    points = [tuple(r) for r in arr]
    fit = fit_exponential_decay(points) if kind == "decay" else fit_power_law(points)
    pred = fit.predict(arr[:, 0])
    rows = [(x, y, p) for x, y, p in zip(arr[:, 0], arr[:, 1], pred)]
    return Outcome(
        [columns[0], columns[1], "fitted"], rows,
        results={"model": fit.model, "params": fit.params, "stderrs": fit.stderrs,
                 "converged": fit.converged, "flags": sorted(fit.flags)},
    )


RUNNERS = {
    "rabi": run_rabi,
    "echo": run_echo,
    "scan-density": run_scan_density,
    "scan-tau": run_scan_tau,
    "fit": run_fit,
}
