"""TOML run configuration: schema, defaults, unit conversion and validation.

Key names carry their unit (``rabi_khz``, ``tau_ns``, ``sigma_um``); ordinary
frequencies are converted to angular ones on access.
"""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import tomli
import tomli_w

from .. import constants as C
from ..dynamics import METHODS, EvolutionConfig
from ..ensemble import CloudSpec, DisorderPlan, LaserNoiseSpec, centered_box
from ..errors import ConfigError
from ..model import DriveParams, InteractionModel

EXPERIMENTS = ("rabi", "echo", "scan-density", "scan-tau", "fit")
FIT_KINDS = ("echo", "decay", "power-law")

REQUIRED = object()
OPTIONAL = object()

# section -> key -> (kind, default)
SCHEMA = {
    "": {
        "experiment": ("str", REQUIRED),
        "seed": ("int", 0),
        "output_dir": ("str", "out"),
    },
    "drive": {
        "rabi_khz": ("float", 90.5),
        "detuning_khz": ("float", 0.0),
    },
    "interaction": {
        "c6_ghz_um6": ("float", OPTIONAL),
        "r_min_nm": ("float", C.DEFAULT_R_MIN * 1e9),
    },
    "cloud": {
        "n_atoms": ("float", C.N_GROUND_MAX),
        "sigma_um": ("vec3", OPTIONAL),
        "temperature_uk": ("float", C.TEMPERATURE * 1e6),
        "trap_hz": ("vec3", OPTIONAL),
        "subvolume_um": ("vec3", OPTIONAL),
        "subvolume_center_um": ("vec3", [0.0, 0.0, 0.0]),
    },
    "noise": {
        "sigma_slow_khz": ("float", C.SIGMA_SLOW / C.TWO_PI / 1e3),
        "sigma_fast_khz": ("float", C.SIGMA_FAST / C.TWO_PI / 1e3),
    },
    "pulse": {
        "tau_ns": ("float", C.TAU_REFERENCE * 1e9),
        "n_tau_p_steps": ("int", C.ECHO_STEPS),
        "tau_p_ns": ("floats", OPTIONAL),
        "tau_list_ns": ("floats", [t * 1e9 for t in C.TAU_SERIES]),
        "t_max_ns": ("float", 2000.0),
        "n_times": ("int", 41),
    },
    "scan": {
        "n_atoms_grid": ("floats", OPTIONAL),
        "with_echo": ("bool", True),
    },
    "numerics": {
        "method": ("str", "split-step"),
        "max_phase_per_step": ("float", 0.05),
        "cap": ("int", C.DEFAULT_CAP),
        "realizations": ("int", 5),
    },
    "fit": {
        "kind": ("str", "echo"),
        "inputs": ("strs", []),
    },
}


def _coerce(kind, value, where):
    def fail():
        raise ConfigError(f"{where}: expected {kind}, got {value!r}")

    if kind == "str":
        if not isinstance(value, str):
            fail()
        return value
    if kind == "bool":
        if not isinstance(value, bool):
            fail()
        return value
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            fail()
        return value
    if kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            fail()
        return float(value)
    if kind in ("floats", "vec3"):
        if not isinstance(value, list):
            fail()
        out = [_coerce("float", v, where) for v in value]
        if kind == "vec3" and len(out) != 3:
            raise ConfigError(f"{where}: expected 3 values, got {len(out)}")
        return out
    if kind == "strs":
        if not isinstance(value, list):
            fail()
        return [_coerce("str", v, where) for v in value]
    raise AssertionError(kind)


def resolve(raw: dict) -> dict:
    """Check keys and types, fill defaults; returns a new nested dict."""
    raw = copy.deepcopy(raw)
    out = {}
    for section, fields in SCHEMA.items():
        src = raw if section == "" else raw.pop(section, {})
        if section and not isinstance(src, dict):
            raise ConfigError(f"[{section}] must be a table")
        dst = out if section == "" else out.setdefault(section, {})
        for key, (kind, default) in fields.items():
            where = f"{section}.{key}" if section else key
            if key in src:
                dst[key] = _coerce(kind, src.pop(key), where)
            elif default is REQUIRED:
                raise ConfigError(f"missing required field '{where}'")
            elif default is not OPTIONAL:
                dst[key] = copy.deepcopy(default)
        if section:
            unknown = sorted(src)
            if unknown:
                raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(unknown)}")
    unknown = sorted(k for k in raw if k not in SCHEMA[""])
    if unknown:
        raise ConfigError(f"unknown key(s): {', '.join(unknown)}")
    return out


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration; ``data`` is the fully resolved nested dict."""

    data: dict

    def __post_init__(self):
        self.validate()

    def __getitem__(self, section):
        return self.data[section]

    @property
    def experiment(self) -> str:
        return self.data["experiment"]

    @property
    def seed(self) -> int:
        return self.data["seed"]

    def replace(self, **top) -> RunConfig:
        data = copy.deepcopy(self.data)
        data.update(top)
        return RunConfig(data)

    def validate(self):
        d = self.data
        if d["experiment"] not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {d['experiment']!r}")
        if not 0 <= d["seed"] < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        num = d["numerics"]
        if num["method"] not in METHODS:
            raise ConfigError(f"numerics.method must be one of {METHODS}")
        if not 0 < num["max_phase_per_step"] <= 1:
            raise ConfigError("numerics.max_phase_per_step must lie in (0, 1]")
        if num["realizations"] < 1:
            raise ConfigError("numerics.realizations must be >= 1")
        if num["cap"] < 1:
            raise ConfigError("numerics.cap must be >= 1")
        if d["fit"]["kind"] not in FIT_KINDS:
            raise ConfigError(f"fit.kind must be one of {FIT_KINDS}")

        pulse = d["pulse"]
        if pulse["tau_ns"] < 0:
            raise ConfigError("pulse.tau_ns must be >= 0")
        if pulse["n_tau_p_steps"] < 2:
            raise ConfigError("pulse.n_tau_p_steps must be >= 2")
        for tp in pulse.get("tau_p_ns", []):
            if not 0 <= tp <= pulse["tau_ns"]:
                raise ConfigError(f"pulse.tau_p_ns value {tp} outside [0, tau_ns = {pulse['tau_ns']}]")
        if any(t <= 0 for t in pulse["tau_list_ns"]):
            raise ConfigError("pulse.tau_list_ns values must be > 0")
        if pulse["t_max_ns"] <= 0 or pulse["n_times"] < 2:
            raise ConfigError("pulse.t_max_ns must be > 0 and pulse.n_times >= 2")
        if d["drive"]["rabi_khz"] < 0:
            raise ConfigError("drive.rabi_khz must be >= 0")
        if d["interaction"]["r_min_nm"] <= 0:
            raise ConfigError("interaction.r_min_nm must be > 0")
        for key in ("sigma_slow_khz", "sigma_fast_khz"):
            if d["noise"][key] < 0:
                raise ConfigError(f"noise.{key} must be >= 0")

        if d["experiment"] == "fit":
            return
        if "c6_ghz_um6" not in d["interaction"]:
            raise ConfigError("interaction.c6_ghz_um6 is required (no default C6 is assumed)")
        cloud = d["cloud"]
        if ("sigma_um" in cloud) == ("trap_hz" in cloud):
            raise ConfigError("cloud needs exactly one of sigma_um or trap_hz")
        if cloud["n_atoms"] < 1:
            raise ConfigError("cloud.n_atoms must be >= 1")
        for key in ("sigma_um", "trap_hz", "subvolume_um"):
            if key in cloud and any(v <= 0 for v in cloud[key]):
                raise ConfigError(f"cloud.{key} values must be > 0")
        if cloud["temperature_uk"] <= 0:
            raise ConfigError("cloud.temperature_uk must be > 0")
        if d["experiment"] == "scan-density":
            grid = d["scan"].get("n_atoms_grid")
            if not grid or len(grid) < 2 or any(n < 1 for n in grid):
                raise ConfigError("scan.n_atoms_grid needs at least 2 values >= 1")

    # physical objects -----------------------------------------------------

    def drive(self) -> DriveParams:
        dr = self.data["drive"]
        return DriveParams(C.TWO_PI * 1e3 * dr["rabi_khz"], C.TWO_PI * 1e3 * dr["detuning_khz"])

    def interaction(self) -> InteractionModel:
        it = self.data["interaction"]
        return InteractionModel(C.TWO_PI * 1e9 * it["c6_ghz_um6"] * 1e-36, it["r_min_nm"] * 1e-9)

    def cloud_spec(self, n_atoms: float | None = None) -> CloudSpec:
        cl = self.data["cloud"]
        n = cl["n_atoms"] if n_atoms is None else n_atoms
        if "sigma_um" in cl:
            return CloudSpec(n, tuple(s * 1e-6 for s in cl["sigma_um"]))
        return CloudSpec.from_temperature(
            n, cl["temperature_uk"] * 1e-6, [C.TWO_PI * f for f in cl["trap_hz"]])

    def noise(self) -> LaserNoiseSpec:
        nz = self.data["noise"]
        return LaserNoiseSpec(C.TWO_PI * 1e3 * nz["sigma_slow_khz"],
                              C.TWO_PI * 1e3 * nz["sigma_fast_khz"])

    def plan(self) -> DisorderPlan:
        cl = self.data["cloud"]
        box = None
        if "subvolume_um" in cl:
            box = centered_box([e * 1e-6 for e in cl["subvolume_um"]],
                               [c * 1e-6 for c in cl["subvolume_center_um"]])
        return DisorderPlan(self.data["numerics"]["realizations"], self.seed, box)

    def evolution(self) -> EvolutionConfig:
        num = self.data["numerics"]
        return EvolutionConfig(num["method"], num["max_phase_per_step"], num["cap"])

    @property
    def tau(self) -> float:
        return self.data["pulse"]["tau_ns"] * 1e-9

    def tau_p_grid(self, tau: float | None = None) -> np.ndarray:
        """Phase-flip times; ``n_tau_p_steps`` equal steps from 0 to tau unless listed explicitly."""
        pulse = self.data["pulse"]
        if tau is None and "tau_p_ns" in pulse:
            return np.array(pulse["tau_p_ns"]) * 1e-9
        tau = self.tau if tau is None else tau
        return np.linspace(0.0, tau, pulse["n_tau_p_steps"] + 1)


def _with_experiment(raw, experiment):
    if experiment is not None:
        given = raw.setdefault("experiment", experiment)
        if given != experiment:
            raise ConfigError(f"config is for experiment {given!r}, not {experiment!r}")
    return raw


def load_config(path, experiment: str | None = None) -> RunConfig:
    """Read a TOML config, or the ``config`` table of a JSON run manifest.

    ``experiment`` (the CLI subcommand) fills a missing ``experiment`` key
    and must agree with a present one.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc.msg} (at line {exc.lineno}, column {exc.colno})") from exc
        if not isinstance(raw, dict) or "config" not in raw:
            raise ConfigError(f"{path}: JSON input must be a run manifest with a 'config' table")
        raw = raw["config"]
    else:
        try:
            raw = tomli.loads(text)
        except tomli.TOMLDecodeError as exc:
            # tomli reports "(at line L, column C)"
            raise ConfigError(f"{path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a table")
    return RunConfig(resolve(_with_experiment(raw, experiment)))


def loads_config(text: str, experiment: str | None = None) -> RunConfig:
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(str(exc)) from exc
    return RunConfig(resolve(_with_experiment(raw, experiment)))


def dump_config(cfg: RunConfig) -> str:
    return tomli_w.dumps(cfg.data)
