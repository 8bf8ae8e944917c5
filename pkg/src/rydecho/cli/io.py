"""CSV tables and JSON run manifests.

CSV files start with ``#``-prefixed ``key = value`` metadata lines, followed
by a header row whose column names carry units, then data rows. Floats are
written with 17 significant digits via ``format(x, ".17g")``, which does not
depend on the process locale.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from pathlib import Path

from .. import __version__


def fmt(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float) or hasattr(value, "dtype"):
        return format(float(value), ".17g")
    return str(value)


def render_csv(columns, rows, meta=None) -> str:
    buf = io.StringIO()
    for key, value in (meta or {}).items():
        buf.write(f"# {key} = {fmt(value)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path, columns, rows, meta=None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_csv(columns, rows, meta), encoding="utf-8", newline="")
    return path


def read_csv(path):
    """Returns ``(meta, columns, rows)``; numeric cells become floats."""
    meta, lines = {}, []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("#"):
            key, sep, value = line[1:].partition("=")
            if sep:
                meta[key.strip()] = value.strip()
        elif line.strip():
            lines.append(line)
    reader = csv.reader(lines)
    columns = next(reader)
    rows = []
    for raw in reader:
        row = []
        for cell in raw:
            try:
                row.append(float(cell))
            except ValueError:
                row.append(cell)
        rows.append(row)
    return meta, columns, rows


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=True)


def input_hash(config_data: dict) -> str:
    """SHA-256 over the resolved configuration and code version (the run's inputs)."""
    return hashlib.sha256(_canonical({"version": __version__, "config": config_data}).encode()).hexdigest()


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if hasattr(value, "tolist"):
        return _jsonable(value.tolist())
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


def build_manifest(config_data: dict, outputs: dict, results: dict) -> dict:
    return {
        "tool": "rydecho",
        "version": __version__,
        "experiment": config_data["experiment"],
        "seed": config_data["seed"],
        "input_sha256": input_hash(config_data),
        "config": config_data,
        "outputs": outputs,
        "results": _jsonable(results),
    }


def write_manifest(path, manifest: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
