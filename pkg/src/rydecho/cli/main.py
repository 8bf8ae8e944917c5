"""Command-line entry point: ``rydecho <experiment> --config PATH``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ..errors import (CapacityError, ConfigError, DegenerateDataError, InvalidInputError,
                      NumericalError, UndefinedVisibilityError)
from .config import EXPERIMENTS, RunConfig, load_config
from .experiments import RUNNERS, Outcome
from .io import build_manifest, input_hash, write_csv, write_manifest

log = logging.getLogger("rydecho")

EXIT_OK, EXIT_CONFIG, EXIT_CAPACITY, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4, 5


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, CapacityError):
        return EXIT_CAPACITY
    if isinstance(exc, (ConfigError, InvalidInputError)):
        return EXIT_CONFIG
    if isinstance(exc, (NumericalError, DegenerateDataError, UndefinedVisibilityError)):
        return EXIT_NUMERICAL
    if isinstance(exc, OSError):
        return EXIT_IO
    raise exc


def _plot(path: Path, plot: dict) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    ax.errorbar(plot["x"], plot["y"], yerr=plot.get("yerr"), fmt="s", ms=4, capsize=2)
    if "fit_x" in plot:
        ax.plot(plot["fit_x"], plot["fit_y"], "-", lw=1)
    if plot.get("log"):
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_xlabel(plot["xlabel"])
    ax.set_ylabel(plot["ylabel"])
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def run(cfg: RunConfig, out_dir=None, threads: int = 1, plot: bool = False) -> dict:
    """Execute one experiment and write ``<experiment>.csv`` plus ``<experiment>.manifest.json``.

    Returns the manifest. Output files do not depend on ``threads``.
    """
    out_dir = Path(out_dir if out_dir is not None else cfg.data["output_dir"])
    outcome: Outcome = RUNNERS[cfg.experiment](cfg, threads=threads)
    stem = cfg.experiment
    meta = {"tool": "rydecho", "experiment": cfg.experiment, "seed": cfg.seed,
            "input_sha256": input_hash(cfg.data), **outcome.meta}
    csv_path = write_csv(out_dir / f"{stem}.csv", outcome.columns, outcome.rows, meta)
    outputs = {"csv": csv_path.name}
    if plot and outcome.plot is not None:
        svg = out_dir / f"{stem}.svg"
        _plot(svg, outcome.plot)
        outputs["plot"] = svg.name
    manifest = build_manifest(cfg.data, outputs, outcome.results)
    write_manifest(out_dir / f"{stem}.manifest.json", manifest)
    return manifest


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rydecho", description="Rotary-echo simulations of a strongly interacting Rydberg gas")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path,
                       help="TOML config, or a run manifest (.json) to reproduce")
        p.add_argument("--seed", type=int, help="override the config seed (unsigned 64-bit)")
        p.add_argument("--out", type=Path, help="output directory (default: config output_dir)")
        p.add_argument("--threads", type=int, default=1, help="worker threads for realizations")
        p.add_argument("--plot", action="store_true", help="also write an SVG plot")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg = load_config(args.config, args.experiment)
        if args.seed is not None:
            cfg = cfg.replace(seed=args.seed)
        manifest = run(cfg, args.out, args.threads, args.plot)
    except Exception as exc:  # noqa: BLE001 - mapped to exit categories below
        code = exit_code(exc)
        category = {2: "config", 3: "capacity", 4: "numerical", 5: "io"}[code]
        print(f"rydecho: {category} error: {exc}", file=sys.stderr)
        return code
    log.info("wrote %s (input %s)", manifest["outputs"]["csv"], manifest["input_sha256"][:12])
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
