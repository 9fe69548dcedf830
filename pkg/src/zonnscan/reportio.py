"""Atomic report writing.

JSON reports carry a ``meta`` object holding the timestamp (and nothing else
time-dependent); every other byte of a report is a pure function of the
inputs and seed.  Files are written to a temporary name and renamed into
place so failed commands never leave partial outputs.
"""

from __future__ import annotations

import csv
import json
import os
from datetime import datetime, timezone

import numpy as np


def report_meta() -> dict:
    return {"created_at": datetime.now(timezone.utc).isoformat()}


def write_json(path, payload: dict, with_meta: bool = True) -> None:
    doc = {"meta": report_meta()} if with_meta else {}
    doc.update(payload)
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, allow_nan=False)
        fh.write("\n")
    os.replace(tmp, path)


def write_values_csv(path, values, header: str | None = None) -> None:
    """One float per line, exact round-trip formatting."""
    values = np.asarray(values, dtype=np.float64)
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        if header:
            fh.write(f"{header}\n")
        for v in values:
            fh.write(f"{float(v)!r}\n")
    os.replace(tmp, path)


def write_rows_csv(path, header, rows) -> None:
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    os.replace(tmp, path)


def read_values_csv(path) -> np.ndarray:
    values = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                values.append(float(line))
            except ValueError:
                # tolerate a single header line
                if values:
                    raise
    return np.array(values, dtype=np.float64)
