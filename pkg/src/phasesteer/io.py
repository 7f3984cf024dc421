"""Deterministic CSV/JSON writers.

Every file carries the resolved run configuration and seed.  CSV files
start with ``#`` comment lines naming a versioned schema; JSON files hold
the same information under ``"schema"`` and ``"config"`` keys.  Floats are
written with ``repr`` (shortest round-trip form) and keys are sorted, so a
rerun with the same seed produces byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1


def schema_name(table: str) -> str:
    return f"phasesteer.{table}/v{SCHEMA_VERSION}"


def to_plain(obj):
    """Recursively convert numpy scalars/arrays and tuples to JSON-ready values; NaN and inf become None."""
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def dumps(obj) -> str:
    return json.dumps(to_plain(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _cell(x) -> str:
    x = to_plain(x)
    if x is None:
        return "nan"
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_json(path, table: str, payload: dict, config: dict) -> Path:
    path = Path(path)
    doc = {"schema": schema_name(table), "config": config, "seed": config.get("seed"), "data": payload}
    path.write_text(dumps(doc), encoding="utf-8")
    return path


def write_csv(path, table: str, rows: list[dict], config: dict, columns: list[str] | None = None) -> Path:
    """Write ``rows`` under a three-line comment header (schema, seed, config)."""
    path = Path(path)
    if columns is None:
        columns = list(rows[0]) if rows else []
    buf = io.StringIO()
    buf.write(f"# schema: {schema_name(table)}\n")
    buf.write(f"# seed: {config.get('seed')}\n")
    buf.write(f"# config: {json.dumps(to_plain(config), sort_keys=True, allow_nan=False)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c)) for c in columns])
    path.write_text(buf.getvalue(), encoding="utf-8")
    return path


def read_csv(path) -> tuple[dict, list[dict]]:
    """Parse a file written by :func:`write_csv`; returns (header, rows) with string cells."""
    header = {}
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    body = []
    for line in lines:
        if line.startswith("# "):
            key, _, value = line[2:].partition(": ")
            header[key] = json.loads(value) if key == "config" else value
        else:
            body.append(line)
    rows = list(csv.DictReader(body))
    return header, rows
