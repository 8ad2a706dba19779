"""Command-line entry point: presets, overrides, and bit-exact file output.

All delimited output uses shortest-round-trip decimal formatting (Python's
``repr`` of a float), UTF-8, LF newlines and a header row, so every file
re-parses to exactly the values that were computed in memory.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    MechanicalDensityMatrix,
    fock_distribution,
    negativity_ratio,
    qfi_max,
    reduce_to_mechanical,
    wigner,
)
from .config import (
    PRESETS,
    RunConfig,
    SnapshotRun,
    SweepRun,
    TrajectoryRun,
    apply_overrides,
    config_to_document,
    parse_document,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    CoverageError,
    HybridSimError,
    SweepError,
    TruncationError,
)
from .hilbert import build_initial_state, make_space
from .propagator import PropagatorConfig, convergence_check, evolve
from .sweep import SweepSpec, apply_axis_value, run_sweep

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3
EXIT_IO = 4

THREADS_ENV_VAR = "HYBRIDSIM_THREADS"


def _fmt(x: float) -> str:
    return repr(float(x))


def _write_text(path: Path, lines):
    with open(path, "w", encoding="utf-8", newline="") as handle:
        for line in lines:
            handle.write(line)
            handle.write("\n")


def write_trajectory_csv(path: Path, record):
    rows = ["tau,qubit_pop,phonon_pop,photon_pop"]
    for k in range(record.times.size):
        rows.append(
            ",".join(
                _fmt(v)
                for v in (
                    record.times[k],
                    record.qubit_population[k],
                    record.phonon_population[k],
                    record.photon_population[k],
                )
            )
        )
    _write_text(path, rows)


def write_wigner_csv(path: Path, grid):
    rows = ["x,p,W"]
    for i, x in enumerate(grid.x):
        xs = _fmt(x)
        for j, p in enumerate(grid.p):
            rows.append(f"{xs},{_fmt(p)},{_fmt(grid.values[i, j])}")
    _write_text(path, rows)


def write_fock_csv(path: Path, probabilities):
    rows = ["n,P(n)"]
    rows.extend(f"{n},{_fmt(p)}" for n, p in enumerate(probabilities))
    _write_text(path, rows)


def write_sweep_csv(path: Path, result):
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["axis1", "axis2", "value", "flag"])
        for i, v1 in enumerate(result.axis1_values):
            for j, v2 in enumerate(result.axis2_values):
                writer.writerow(
                    [_fmt(v1), _fmt(v2), _fmt(result.values[i, j]), result.flags[i][j]]
                )


def _corner_value(axis) -> float:
    """Endpoint of a swept axis expected to stress the truncation hardest.

    Drive, couplings and coherent amplitude grow occupation monotonically;
    negative detuning keeps the drive effective; theta = +-pi maximizes the
    mechanical response.
    """
    lo, hi = float(axis.start), float(axis.stop)
    if axis.name in ("E0", "G_mc", "G_qm", "alpha_cav"):
        return max(lo, hi, key=abs)
    if axis.name == "D":
        return min(lo, hi)
    return max(lo, hi, key=lambda t: abs(math.sin(0.5 * t)))  # theta


def _propagator_with_times(config: RunConfig, times, store_states=True) -> PropagatorConfig:
    return PropagatorConfig(
        sample_times=tuple(float(t) for t in times),
        backend=config.propagator.backend,
        krylov_dim=config.propagator.krylov_dim,
        step_tolerance=config.propagator.step_tolerance,
        max_substep=config.propagator.max_substep,
        store_states=store_states,
    )


def _convergence_probe(config: RunConfig):
    """(params, state, tau) whose truncation demands bound the whole run."""
    run = config.run
    if isinstance(run, TrajectoryRun):
        tau_c = config.model.tau_c
        tau = tau_c if 0.0 < tau_c < run.t_max else run.t_max
        return config.model, config.state, tau
    if isinstance(run, SnapshotRun):
        return config.model, config.state, max(run.times)
    params, state = config.model, config.state
    for axis in (run.axis1, run.axis2):
        params, state = apply_axis_value(params, state, axis.name, _corner_value(axis))
    return params, state, run.snapshot_time


def _check_convergence(config: RunConfig) -> dict:
    params, state, tau = _convergence_probe(config)
    if tau <= 0.0:
        return {"skipped": "horizon is zero"}
    space = make_space(params.n_qubits, config.dim_mech, config.dim_cav)
    psi0 = build_initial_state(space, state)
    probe_cfg = _propagator_with_times(config, [tau])
    report = convergence_check(
        space,
        params,
        psi0,
        tau,
        probe_cfg,
        factor=config.convergence_factor,
        top_fock_tol=config.top_fock_tol,
    )
    summary = {
        "tau": report.tau,
        "base_dims": list(report.base_dims),
        "enlarged_dims": list(report.enlarged_dims),
        "phonon_rel_dev": report.phonon_rel_dev,
        "photon_rel_dev": report.photon_rel_dev,
        "top_mech_occupancy": report.top_mech_base,
        "top_cav_occupancy": report.top_cav_base,
        "passed": report.passed,
    }
    if not report.passed:
        raise ConvergenceError(
            "truncation check failed: top Fock occupancies "
            f"mech={report.top_mech_base:.3e}, cav={report.top_cav_base:.3e} "
            f"at tau={tau:.6g} for dims {report.base_dims}; enlarge space.dim_*"
        )
    return summary


def _snapshot_metrics(config: RunConfig, rho: MechanicalDensityMatrix, with_wigner: bool):
    metrics = {
        "phonon_mean": rho.phonon_mean(),
        "purity": rho.purity(),
        "qfi_max": None,
        "qfi_phi": None,
        "zeta": None,
    }
    info = qfi_max(rho, eta_tol=config.analysis.eta_tol)
    metrics["qfi_max"] = info.value
    metrics["qfi_phi"] = info.phi
    grid = None
    if with_wigner:
        grid = wigner(
            rho,
            extent=config.analysis.wigner_extent,
            points=config.analysis.wigner_points,
        )
        metrics["zeta"] = negativity_ratio(grid)
    return metrics, grid


def execute(config: RunConfig, threads: int = 1, out_dir: str | None = None) -> dict:
    """Run a full configuration and write its output files.

    Returns the metadata dictionary that is also serialized to
    ``meta.json`` in the output directory.
    """
    started = time.perf_counter()
    out = Path(out_dir if out_dir is not None else config.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    runtimes: dict[str, float] = {}
    outputs: dict[str, object] = {}
    metrics: dict[str, object] = {}

    convergence: dict[str, object]
    if config.check_convergence:
        t0 = time.perf_counter()
        convergence = _check_convergence(config)
        runtimes["convergence_check"] = time.perf_counter() - t0
    else:
        convergence = {"skipped": "check_convergence is false"}

    space = make_space(config.model.n_qubits, config.dim_mech, config.dim_cav)
    run = config.run
    t0 = time.perf_counter()

    if isinstance(run, TrajectoryRun):
        psi0 = build_initial_state(space, config.state)
        times = np.linspace(0.0, run.t_max, run.samples)
        prop = _propagator_with_times(config, times, store_states=False)
        record = evolve(space, config.model, psi0, prop)
        runtimes["propagation"] = time.perf_counter() - t0
        write_trajectory_csv(out / "trajectory.csv", record)
        outputs["trajectory"] = "trajectory.csv"
        peak = int(np.argmax(record.phonon_population))
        metrics.update(
            {
                "final_qubit_pop": record.qubit_population[-1],
                "final_phonon_pop": record.phonon_population[-1],
                "final_photon_pop": record.photon_population[-1],
                "phonon_peak_tau": record.times[peak],
                "phonon_peak_value": record.phonon_population[peak],
                "propagation_error_bound": record.error_bound,
            }
        )

    elif isinstance(run, SnapshotRun):
        psi0 = build_initial_state(space, config.state)
        prop = _propagator_with_times(config, run.times)
        record = evolve(space, config.model, psi0, prop)
        runtimes["propagation"] = time.perf_counter() - t0
        t0 = time.perf_counter()
        per_time = {}
        wigner_files = {}
        for k, tau in enumerate(run.times):
            rho = reduce_to_mechanical(space, record.states[k])
            snap, grid = _snapshot_metrics(config, rho, run.wigner)
            per_time[_fmt(tau)] = snap
            if grid is not None:
                name = f"wigner_{_fmt(tau)}.csv"
                write_wigner_csv(out / name, grid)
                wigner_files[_fmt(tau)] = name
            if run.fock and k == len(run.times) - 1:
                write_fock_csv(out / "fock.csv", fock_distribution(rho))
                outputs["fock"] = "fock.csv"
        runtimes["analysis"] = time.perf_counter() - t0
        if wigner_files:
            outputs["wigner"] = wigner_files
        metrics["snapshots"] = per_time
        last = per_time[_fmt(run.times[-1])]
        metrics.update(
            {
                "zeta": last["zeta"],
                "qfi_max": last["qfi_max"],
                "phonon_mean": last["phonon_mean"],
                "propagation_error_bound": record.error_bound,
            }
        )

    else:
        spec = SweepSpec(
            axis1=run.axis1,
            axis2=run.axis2,
            params=config.model,
            state=config.state,
            dim_mech=config.dim_mech,
            dim_cav=config.dim_cav,
            propagator=config.propagator,
            observable=run.observable,
            snapshot_time=run.snapshot_time,
            wigner_points=config.analysis.wigner_points,
            wigner_extent=config.analysis.wigner_extent,
            eta_tol=config.analysis.eta_tol,
        )
        result = run_sweep(spec, parallelism=threads)
        runtimes["sweep"] = time.perf_counter() - t0
        write_sweep_csv(out / "sweep.csv", result)
        outputs["sweep"] = "sweep.csv"
        clean = result.values[np.isfinite(result.values)]
        metrics.update(
            {
                "observable": run.observable,
                "value_min": float(clean.min()) if clean.size else None,
                "value_max": float(clean.max()) if clean.size else None,
                "failed_cells": len(result.failed_cells()),
            }
        )

    runtimes["total"] = time.perf_counter() - started
    meta = {
        "version": __version__,
        "config": config_to_document(config),
        "truncations": {"dim_mech": config.dim_mech, "dim_cav": config.dim_cav},
        "convergence": convergence,
        "metrics": metrics,
        "outputs": outputs,
        "runtime_seconds": runtimes,
    }
    with open(out / "meta.json", "w", encoding="utf-8", newline="") as handle:
        json.dump(meta, handle, indent=2, sort_keys=True)
        handle.write("\n")
    return meta


def run_preset(
    name: str,
    overrides: list[str] | None = None,
    out_dir: str | None = None,
    threads: int = 1,
) -> dict:
    """Expand a named preset, apply overrides, and execute it."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; known: {sorted(PRESETS)}")
    doc = apply_overrides({"preset": name}, list(overrides or []))
    config = parse_document(doc)
    return execute(config, threads=threads, out_dir=out_dir)


def _default_threads() -> int:
    raw = os.environ.get(THREADS_ENV_VAR, "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hybridsim",
        description="Simulate the driven qubit/mechanics/cavity stack and "
        "export trajectories, Wigner maps, Fock distributions and sweeps.",
    )
    parser.add_argument("--preset", choices=sorted(PRESETS), help="named experiment")
    parser.add_argument("--config", type=Path, help="JSON configuration file")
    parser.add_argument("--out", type=Path, help="output directory")
    parser.add_argument(
        "--override",
        action="append",
        default=[],
        metavar="PATH=VALUE",
        help="dotted-path override applied after preset expansion (repeatable)",
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help=f"sweep worker budget (default ${THREADS_ENV_VAR} or 1)",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    threads = args.threads if args.threads is not None else _default_threads()
    try:
        doc: dict = {}
        if args.config is not None:
            try:
                text = args.config.read_text(encoding="utf-8")
            except OSError as exc:
                print(f"error: cannot read {args.config}: {exc}", file=sys.stderr)
                return EXIT_IO
            try:
                parsed = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{args.config}: invalid JSON: {exc}") from exc
            if not isinstance(parsed, dict):
                raise ConfigError(f"{args.config}: top level must be an object")
            doc = parsed
        if args.preset is not None:
            doc["preset"] = args.preset
        if not doc:
            raise ConfigError("nothing to run: pass --preset and/or --config")
        doc = apply_overrides(doc, args.override)
        config = parse_document(doc)
        out_dir = str(args.out) if args.out is not None else None
        meta = execute(config, threads=max(1, threads), out_dir=out_dir)
    except (ConfigError, TruncationError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, CoverageError, SweepError) as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return EXIT_IO
    except HybridSimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    out = Path(out_dir) if out_dir is not None else Path(config.output_dir)
    written = ", ".join(sorted(_flatten_outputs(meta["outputs"]))) or "meta.json"
    print(f"wrote {written} and meta.json in {out}")
    return EXIT_OK


def _flatten_outputs(outputs) -> list[str]:
    names = []
    for value in outputs.values():
        if isinstance(value, dict):
            names.extend(value.values())
        else:
            names.append(value)
    return names


if __name__ == "__main__":
    sys.exit(main())
