"""Deterministic CSV/JSON emitters with schema versions and provenance.

No timestamps anywhere: identical configs and seeds must produce
byte-identical files.
"""

from __future__ import annotations

import csv
import json

import numpy as np

from ..exceptions import IoFailure

SCHEMA_VERSION = 1


def format_value(v):
    if isinstance(v, (np.floating, float)):
        return f"{float(v):.9g}"
    if isinstance(v, (np.integer, int)):
        return str(int(v))
    return str(v)


def write_csv(path, header, rows):
    """RFC-4180-style CSV (CRLF, minimal quoting); floats at 9 significant
    digits for stable bytes."""
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, quoting=csv.QUOTE_MINIMAL)
            writer.writerow(header)
            for row in rows:
                writer.writerow([format_value(v) for v in row])
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def write_json(path, payload, provenance=None):
    """JSON with a schema_version field and optional provenance block."""
    doc = {"schema_version": SCHEMA_VERSION}
    doc.update(_jsonable(payload))
    if provenance is not None:
        doc["provenance"] = _jsonable(provenance)
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from e


def make_provenance(config, checkpoints=None, seed=None):
    """Record of what produced an output file (config, inputs, seed)."""
    return {
        "config": _jsonable(config),
        "checkpoints": _jsonable(checkpoints or {}),
        "seed": seed,
    }
