"""CSV and JSON artifact writers used by the command line runs."""

from __future__ import annotations

import csv
import json
import os
from typing import Iterable

import numpy as np

NODE_COLUMNS = ["proof_index", "sigma", "passive_nodes", "done", "impossible", "seconds"]
LOSS_COLUMNS = ["wall_step", "network", "minibatch_size", "loss"]
BENCH_COLUMNS = ["sigma", "policy", "filters", "passive_nodes", "done", "impossible", "seconds"]


def write_csv(path: str, columns: list[str], rows: Iterable[dict]) -> str:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow({c: row.get(c, "") for c in columns})
    return path


def write_json(path: str, payload) -> str:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, default=_default)
        fh.write("\n")
    return path


def _default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    raise TypeError(f"cannot serialize {type(obj)}")


def matrix_lines(mat: np.ndarray) -> list[str]:
    """Human-readable matrix with '-' for unavailable cuts."""
    out = []
    for row in mat:
        out.append(" ".join("   -" if v < 0 else f"{int(v):4d}" for v in row))
    return out
