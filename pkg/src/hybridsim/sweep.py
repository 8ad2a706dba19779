"""Deterministic 2-D parameter sweeps of the full simulation pipeline.

Each grid cell runs an independent simulate -> reduce -> analyze pipeline
at a truncation fixed for the whole sweep, so trends are not confounded by
per-cell discretization changes.  Cells are pure functions of the spec and
their grid index; results are identical for any parallelism budget.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .analysis import negativity_ratio, qfi_max, reduce_to_mechanical, wigner
from .errors import HybridSimError, SweepError
from .hilbert import InitialStateSpec, build_initial_state, make_space
from .model import ModelParams
from .propagator import PropagatorConfig, state_at

# Swept field -> which part of the configuration it lives in.
AXIS_TARGETS = {
    "theta": "state",
    "alpha_cav": "state",
    "G_qm": "model",
    "G_mc": "model",
    "D": "model",
    "E0": "model",
}

OBSERVABLES = ("zeta", "qfi_max", "phonon_population")

# A sweep aborts when more than this fraction of cells fail.
MAX_FAILED_FRACTION = 0.10


@dataclass(frozen=True)
class SweepAxis:
    """Uniform grid over one swept parameter."""

    name: str
    start: float
    stop: float
    count: int

    def __post_init__(self):
        if self.name not in AXIS_TARGETS:
            raise ValueError(f"unknown sweep axis {self.name!r}")
        if self.count < 2:
            raise ValueError("axis needs at least two points")

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.count)


@dataclass(frozen=True)
class SweepSpec:
    """Two swept axes over a fixed base configuration."""

    axis1: SweepAxis
    axis2: SweepAxis
    params: ModelParams
    state: InitialStateSpec
    dim_mech: int
    dim_cav: int
    propagator: PropagatorConfig
    observable: str = "zeta"
    snapshot_time: float = math.pi
    wigner_points: int = 201
    wigner_extent: float | None = None
    eta_tol: float = 1e-12

    def __post_init__(self):
        if self.axis1.name == self.axis2.name:
            raise ValueError("sweep axes must be distinct")
        if self.observable not in OBSERVABLES:
            raise ValueError(f"unknown observable {self.observable!r}")


@dataclass
class SweepResult:
    axis1_values: np.ndarray
    axis2_values: np.ndarray
    values: np.ndarray  # shape (axis1.count, axis2.count); NaN where flagged
    flags: list[list[str]]  # "" for clean cells, else a short diagnostic
    runtime_seconds: float

    def failed_cells(self) -> list[tuple[int, int, str]]:
        return [
            (i, j, msg)
            for i, row in enumerate(self.flags)
            for j, msg in enumerate(row)
            if msg
        ]


def apply_axis_value(
    params: ModelParams, state: InitialStateSpec, name: str, value: float
) -> tuple[ModelParams, InitialStateSpec]:
    """Set one swept field on the model or the initial state."""
    if AXIS_TARGETS[name] == "model":
        return replace(params, **{name: float(value)}), state
    if name == "theta":
        return params, replace(state, theta=float(value))
    return params, replace(state, alpha_cav=complex(value))


def evaluate_cell(spec: SweepSpec, value1: float, value2: float) -> float:
    """One grid cell: simulate to the snapshot time and measure the observable."""
    params, state = spec.params, spec.state
    for axis, value in ((spec.axis1, value1), (spec.axis2, value2)):
        params, state = apply_axis_value(params, state, axis.name, value)
    space = make_space(params.n_qubits, spec.dim_mech, spec.dim_cav)
    psi0 = build_initial_state(space, state)
    psi = state_at(space, params, psi0, spec.snapshot_time, spec.propagator)
    rho = reduce_to_mechanical(space, psi)
    if spec.observable == "zeta":
        grid = wigner(rho, extent=spec.wigner_extent, points=spec.wigner_points)
        return negativity_ratio(grid)
    if spec.observable == "qfi_max":
        return qfi_max(rho, eta_tol=spec.eta_tol).value
    return rho.phonon_mean()


def _cell_task(args):
    spec, i, j, v1, v2 = args
    try:
        return i, j, evaluate_cell(spec, v1, v2), ""
    except (HybridSimError, ValueError) as exc:
        return i, j, math.nan, f"{type(exc).__name__}: {exc}"


def run_sweep(spec: SweepSpec, parallelism: int = 1) -> SweepResult:
    """Run every cell; row-major over (axis1, axis2).

    ``parallelism`` is a worker-process budget; it affects wall time only,
    never the numbers.  Individual cell failures are recorded as NaN with a
    diagnostic flag; the sweep itself fails only when more than
    ``MAX_FAILED_FRACTION`` of the cells do.
    """
    started = time.perf_counter()
    values1 = spec.axis1.values()
    values2 = spec.axis2.values()
    shape = (spec.axis1.count, spec.axis2.count)
    values = np.full(shape, math.nan)
    flags = [["" for _ in range(shape[1])] for _ in range(shape[0])]

    tasks = [
        (spec, i, j, float(values1[i]), float(values2[j]))
        for i in range(shape[0])
        for j in range(shape[1])
    ]
    if parallelism <= 1:
        outcomes = map(_cell_task, tasks)
    else:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            outcomes = list(pool.map(_cell_task, tasks, chunksize=1))
    for i, j, value, flag in outcomes:
        values[i, j] = value
        flags[i][j] = flag

    failed = sum(1 for row in flags for msg in row if msg)
    if failed > MAX_FAILED_FRACTION * values.size:
        details = "; ".join(
            f"({i},{j}) {msg}"
            for i, row in enumerate(flags)
            for j, msg in enumerate(row)
            if msg
        )
        raise SweepError(
            f"{failed}/{values.size} sweep cells failed (limit "
            f"{MAX_FAILED_FRACTION:.0%}): {details}"
        )
    return SweepResult(
        axis1_values=values1,
        axis2_values=values2,
        values=values,
        flags=flags,
        runtime_seconds=time.perf_counter() - started,
    )
