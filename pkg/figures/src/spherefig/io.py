"""Readers and schema checks for the experiment CLI's output files."""

from __future__ import annotations

import csv
import json
import warnings
from pathlib import Path

import numpy as np

EXPECTED_SCHEMA_VERSION = 1

SCORE_KEYS = ("mae", "rmse", "crps", "energy")


class SchemaError(ValueError):
    """Input file does not match the expected CLI schema."""


def read_field_csv(path):
    """Load a lon,lat,value field file into three arrays (radians)."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file")
        cols = [h.strip().lower() for h in header]
        if cols[:3] != ["lon", "lat", "value"]:
            raise SchemaError(f"{path}: expected header lon,lat,value, got {','.join(header)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not f.strip() for f in row):
                continue
            try:
                rows.append((float(row[0]), float(row[1]), float(row[2])))
            except (ValueError, IndexError):
                raise SchemaError(f"{path}:{lineno}: malformed row")
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    arr = np.asarray(rows)
    return arr[:, 0], arr[:, 1], arr[:, 2]


def read_score_records(paths):
    """Load score JSONs: bare six-key records or labeled experiment cells.

    A mismatched or missing schema_version produces a warning and a
    best-effort parse rather than a failure.
    """
    records = []
    for path in paths:
        path = Path(path)
        try:
            obj = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise SchemaError(f"{path}: unreadable score record ({exc})")
        if not isinstance(obj, dict):
            raise SchemaError(f"{path}: expected a JSON object")
        missing = [k for k in SCORE_KEYS if k not in obj]
        if missing:
            raise SchemaError(f"{path}: missing score keys {missing}")
        version = obj.get("schema_version")
        if version != EXPECTED_SCHEMA_VERSION:
            warnings.warn(
                f"{path}: schema_version {version!r} != {EXPECTED_SCHEMA_VERSION}; rendering best-effort",
                stacklevel=2,
            )
        records.append(
            {
                "label": path.stem,
                "true_kind": obj.get("true_kind"),
                "assumed_kind": obj.get("assumed_kind"),
                "split": obj.get("split"),
                "replicate": obj.get("replicate"),
                **{k: float(obj[k]) for k in SCORE_KEYS},
            }
        )
    return records
