"""Schema-checked readers for the simulator's CSV/JSON output contract.

Strictly file-driven: this package never imports the simulator, it only
consumes the documented files (``trajectory.csv``, ``wigner_<tau>.csv``,
``fock.csv``, ``sweep.csv``, ``meta.json``).
"""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

TRAJECTORY_COLUMNS = ["tau", "qubit_pop", "phonon_pop", "photon_pop"]
WIGNER_COLUMNS = ["x", "p", "W"]
FOCK_COLUMNS = ["n", "P(n)"]
SWEEP_COLUMNS = ["axis1", "axis2", "value", "flag"]

_WIGNER_NAME = re.compile(r"^wigner_(.+)\.csv$")


class SchemaError(Exception):
    """An input file does not match the simulator's output contract."""


def _read_rows(path: Path, expected: list[str]) -> list[list[str]]:
    if not path.is_file():
        raise SchemaError(f"{path}: file is missing")
    with open(path, newline="", encoding="utf-8") as handle:
        rows = list(csv.reader(handle))
    if not rows:
        raise SchemaError(f"{path}: file is empty")
    if rows[0] != expected:
        raise SchemaError(
            f"{path}: expected columns {expected}, found {rows[0]}"
        )
    return rows[1:]


def _columns(path: Path, expected: list[str], numeric: int) -> np.ndarray:
    rows = _read_rows(path, expected)
    try:
        return np.array([[float(v) for v in row[:numeric]] for row in rows])
    except (ValueError, IndexError) as exc:
        raise SchemaError(f"{path}: malformed numeric row ({exc})") from exc


def read_trajectory(path: Path) -> dict[str, np.ndarray]:
    data = _columns(path, TRAJECTORY_COLUMNS, 4)
    return dict(zip(TRAJECTORY_COLUMNS, data.T))


@dataclass
class WignerMap:
    tau: float
    x: np.ndarray
    p: np.ndarray
    values: np.ndarray  # shape (len(x), len(p))


def read_wigner(path: Path) -> WignerMap:
    match = _WIGNER_NAME.match(path.name)
    if not match:
        raise SchemaError(f"{path}: Wigner files must be named wigner_<tau>.csv")
    try:
        tau = float(match.group(1))
    except ValueError as exc:
        raise SchemaError(f"{path}: cannot parse the time tag {match.group(1)!r}") from exc
    data = _columns(path, WIGNER_COLUMNS, 3)
    x = np.unique(data[:, 0])
    p = np.unique(data[:, 1])
    if x.size * p.size != data.shape[0]:
        raise SchemaError(f"{path}: rows do not form a rectangular x/p grid")
    values = data[:, 2].reshape(x.size, p.size)
    return WignerMap(tau=tau, x=x, p=p, values=values)


def read_all_wigner(directory: Path) -> list[WignerMap]:
    maps = [read_wigner(p) for p in sorted(directory.glob("wigner_*.csv"))]
    if not maps:
        raise SchemaError(f"{directory}: no wigner_<tau>.csv files found")
    return sorted(maps, key=lambda m: m.tau)


def read_fock(path: Path) -> tuple[np.ndarray, np.ndarray]:
    data = _columns(path, FOCK_COLUMNS, 2)
    return data[:, 0].astype(int), data[:, 1]


@dataclass
class SweepTable:
    axis1: np.ndarray
    axis2: np.ndarray
    values: np.ndarray  # shape (len(axis1), len(axis2)), NaN for flagged cells


def read_sweep(path: Path) -> SweepTable:
    rows = _read_rows(path, SWEEP_COLUMNS)
    try:
        a1 = np.array([float(r[0]) for r in rows])
        a2 = np.array([float(r[1]) for r in rows])
        vals = np.array([float(r[2]) for r in rows])
    except (ValueError, IndexError) as exc:
        raise SchemaError(f"{path}: malformed numeric row ({exc})") from exc
    axis1 = np.unique(a1)
    axis2 = np.unique(a2)
    if axis1.size * axis2.size != len(rows):
        raise SchemaError(f"{path}: rows do not form a rectangular sweep grid")
    grid = np.full((axis1.size, axis2.size), math.nan)
    index1 = {v: i for i, v in enumerate(axis1)}
    index2 = {v: i for i, v in enumerate(axis2)}
    for v1, v2, val in zip(a1, a2, vals):
        grid[index1[v1], index2[v2]] = val
    return SweepTable(axis1=axis1, axis2=axis2, values=grid)


def read_meta(directory: Path) -> dict:
    path = directory / "meta.json"
    if not path.is_file():
        raise SchemaError(f"{path}: file is missing")
    try:
        meta = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(meta, dict):
        raise SchemaError(f"{path}: top level must be an object")
    return meta
