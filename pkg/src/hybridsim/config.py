"""Run configuration documents, presets, and override handling.

A run is described by a JSON document with sections ``model``, ``state``,
``space``, ``propagator``, ``analysis``, ``run`` and a few top-level
scalars.  A document may instead name a ``preset``; explicit keys are
deep-merged on top of the expanded preset, and CLI overrides are merged
last.  Parsing is strict: unknown keys are rejected with their full path.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Any

from .errors import ConfigError
from .hilbert import InitialStateSpec
from .model import ModelParams
from .propagator import PropagatorConfig
from .sweep import SweepAxis

_REQUIRED_SECTIONS = ("model", "state", "space", "run")


@dataclass(frozen=True)
class AnalysisOptions:
    """Phase-space grid and spectral-threshold settings."""

    wigner_points: int = 401
    wigner_extent: float | None = None
    eta_tol: float = 1e-12


@dataclass(frozen=True)
class TrajectoryRun:
    t_max: float
    samples: int = 481

    kind = "trajectory"


@dataclass(frozen=True)
class SnapshotRun:
    times: tuple[float, ...]
    wigner: bool = True
    fock: bool = True

    kind = "snapshot"


@dataclass(frozen=True)
class SweepRun:
    axis1: SweepAxis
    axis2: SweepAxis
    observable: str = "zeta"
    snapshot_time: float = math.pi

    kind = "sweep"


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved description of one CLI invocation."""

    model: ModelParams
    state: InitialStateSpec
    dim_mech: int
    dim_cav: int
    propagator: PropagatorConfig
    analysis: AnalysisOptions
    run: TrajectoryRun | SnapshotRun | SweepRun
    preset: str | None = None
    check_convergence: bool = True
    convergence_factor: float = 1.5
    top_fock_tol: float = 1e-8
    output_dir: str = "out"


# ---------------------------------------------------------------------------
# presets: full documents pinned to the reference parameter sets
# ---------------------------------------------------------------------------

_PI = math.pi


def _base_two_qubit(theta: float, e0: float) -> dict:
    return {
        "model": {
            "w_q": 1.0,
            "G_qm": 0.05,
            "G_mc": 2.0,
            "D": 0.0,
            "E0": e0,
            "tau_c": _PI,
            "n_qubits": 2,
        },
        "state": {
            "kind": "two_qubit_phase",
            "theta": theta,
            "alpha_mech": 0.0,
            "alpha_cav": 1.0,
        },
    }


def _base_single_qubit(e0: float) -> dict:
    doc = _base_two_qubit(0.0, e0)
    doc["model"]["n_qubits"] = 1
    doc["state"] = {
        "kind": "single_superposition",
        "alpha_mech": 0.0,
        "alpha_cav": 1.0,
    }
    return doc


def _presets() -> dict[str, dict]:
    # Fock cutoffs are validated per preset: each rare photon-number sector
    # n displaces the mechanics by up to 4 G_mc^2 n^2 quanta, so cutoffs
    # grow quadratically with the relevant photon support, and the top-level
    # occupancy bar is set per preset to what the strong-coupling regime
    # admits (see README and the preset table).
    fig2 = _base_two_qubit(0.0, 0.3)
    fig2.update(
        {
            "space": {"dim_mech": 320, "dim_cav": 16},
            "propagator": {"step_tolerance": 1e-11},
            "run": {"kind": "trajectory", "t_max": 12 * _PI, "samples": 481},
            "top_fock_tol": 1e-6,
        }
    )

    fig3 = _base_two_qubit(0.0, 0.5)
    fig3.update(
        {
            "space": {"dim_mech": 256, "dim_cav": 20},
            "propagator": {"step_tolerance": 1e-10},
            "run": {
                "kind": "snapshot",
                "times": [0.0, _PI / 3, 2 * _PI / 3, _PI],
                "wigner": True,
                "fock": False,
            },
            "top_fock_tol": 1e-3,
        }
    )

    fig4 = _base_two_qubit(_PI, 0.8)
    fig4.update(
        {
            "space": {"dim_mech": 384, "dim_cav": 24},
            "propagator": {"step_tolerance": 1e-10},
            "analysis": {"wigner_points": 501},
            "run": {"kind": "snapshot", "times": [_PI], "wigner": True, "fock": True},
            "top_fock_tol": 1e-4,
        }
    )

    fig5a = _base_two_qubit(0.0, 0.8)
    fig5a.update(
        {
            "space": {"dim_mech": 320, "dim_cav": 20},
            "analysis": {"wigner_points": 401},
            "run": {
                "kind": "sweep",
                "observable": "zeta",
                "snapshot_time": _PI,
                "axis1": {"name": "theta", "start": -_PI, "stop": _PI, "count": 9},
                "axis2": {"name": "alpha_cav", "start": 0.0, "stop": 1.0, "count": 9},
            },
            "top_fock_tol": 1e-3,
        }
    )

    fig5b = _base_single_qubit(0.8)
    fig5b.update(
        {
            "space": {"dim_mech": 288, "dim_cav": 20},
            "analysis": {"wigner_points": 401},
            "run": {
                "kind": "sweep",
                "observable": "zeta",
                "snapshot_time": _PI,
                "axis1": {"name": "G_qm", "start": 0.01, "stop": 0.1, "count": 9},
                "axis2": {"name": "G_mc", "start": 0.0, "stop": 2.0, "count": 9},
            },
            "top_fock_tol": 1e-3,
        }
    )

    # variant of fig5b with the two-qubit symmetric initial state
    fig5b_twoqubit = _base_two_qubit(0.0, 0.8)
    fig5b_twoqubit.update(
        {
            "space": {"dim_mech": 288, "dim_cav": 20},
            "analysis": {"wigner_points": 401},
            "run": dict(fig5b["run"]),
            "top_fock_tol": 1e-3,
        }
    )

    fig5new_a = _base_single_qubit(0.8)
    fig5new_a.update(
        {
            "space": {"dim_mech": 448, "dim_cav": 28},
            "analysis": {"wigner_points": 501},
            "run": {
                "kind": "sweep",
                "observable": "zeta",
                "snapshot_time": _PI,
                "axis1": {"name": "D", "start": -2.0, "stop": 2.0, "count": 9},
                "axis2": {"name": "E0", "start": 0.0, "stop": 0.8, "count": 9},
            },
            "top_fock_tol": 1e-3,
        }
    )

    fig5new_b = _base_single_qubit(0.8)
    fig5new_b.update(
        {
            "space": {"dim_mech": 288, "dim_cav": 20},
            "analysis": {"wigner_points": 401},
            "run": {
                "kind": "sweep",
                "observable": "zeta",
                "snapshot_time": _PI,
                "axis1": {"name": "E0", "start": 0.0, "stop": 0.8, "count": 9},
                "axis2": {"name": "G_mc", "start": 0.0, "stop": 2.0, "count": 9},
            },
            "top_fock_tol": 1e-3,
        }
    )

    fig6a = _base_two_qubit(0.0, 0.8)
    fig6a.update(
        {
            "space": {"dim_mech": 288, "dim_cav": 20},
            "run": {
                "kind": "sweep",
                "observable": "qfi_max",
                "snapshot_time": _PI,
                "axis1": {"name": "theta", "start": 0.0, "stop": _PI, "count": 2},
                "axis2": {"name": "G_mc", "start": 0.0, "stop": 2.0, "count": 9},
            },
            "top_fock_tol": 1e-3,
        }
    )

    fig6b = _base_two_qubit(0.0, 0.8)
    fig6b.update(
        {
            "space": {"dim_mech": 480, "dim_cav": 32},
            "run": {
                "kind": "sweep",
                "observable": "qfi_max",
                "snapshot_time": _PI,
                "axis1": {"name": "theta", "start": 0.0, "stop": _PI, "count": 2},
                "axis2": {"name": "D", "start": -2.0, "stop": 2.0, "count": 9},
            },
            "top_fock_tol": 1e-4,
        }
    )

    return {
        "fig2": fig2,
        "fig3": fig3,
        "fig4": fig4,
        "fig5a": fig5a,
        "fig5b": fig5b,
        "fig5b_twoqubit": fig5b_twoqubit,
        "fig5new_a": fig5new_a,
        "fig5new_b": fig5new_b,
        "fig6a": fig6a,
        "fig6b": fig6b,
    }


PRESETS = _presets()


# ---------------------------------------------------------------------------
# strict document parsing
# ---------------------------------------------------------------------------


def _fail(path: str, message: str):
    raise ConfigError(f"{path}: {message}")


def _expect_mapping(value, path: str) -> dict:
    if not isinstance(value, dict):
        _fail(path, f"expected an object, got {type(value).__name__}")
    return value


def _reject_unknown(doc: dict, allowed: set[str], path: str):
    unknown = sorted(set(doc) - allowed)
    if unknown:
        _fail(f"{path}.{unknown[0]}" if path else unknown[0], "unknown key")


def _as_float(value, path: str) -> float:
    if isinstance(value, bool):
        _fail(path, "expected a number")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            _fail(path, f"not a number: {value!r}")
    _fail(path, f"expected a number, got {type(value).__name__}")


def _as_int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(path, f"expected an integer, got {type(value).__name__}")
    return value


def _as_bool(value, path: str) -> bool:
    if not isinstance(value, bool):
        _fail(path, f"expected a boolean, got {type(value).__name__}")
    return value


def _as_str(value, path: str) -> str:
    if not isinstance(value, str):
        _fail(path, f"expected a string, got {type(value).__name__}")
    return value


def _as_complex(value, path: str) -> complex:
    if isinstance(value, bool):
        _fail(path, "expected a number or [re, im] pair")
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(_as_float(value[0], path), _as_float(value[1], path))
    _fail(path, "expected a number or [re, im] pair")


def _parse_model(doc: dict, path: str) -> ModelParams:
    allowed = {"w_q", "G_qm", "G_mc", "D", "E0", "tau_c", "n_qubits"}
    _reject_unknown(doc, allowed, path)
    kwargs: dict[str, Any] = {}
    for name in allowed - {"n_qubits"}:
        if name in doc:
            kwargs[name] = _as_float(doc[name], f"{path}.{name}")
    if "n_qubits" in doc:
        kwargs["n_qubits"] = _as_int(doc["n_qubits"], f"{path}.n_qubits")
    try:
        return ModelParams(**kwargs)
    except ValueError as exc:
        _fail(path, str(exc))


def _parse_state(doc: dict, path: str) -> InitialStateSpec:
    allowed = {"kind", "theta", "qubit_amplitudes", "alpha_mech", "alpha_cav"}
    _reject_unknown(doc, allowed, path)
    kwargs: dict[str, Any] = {}
    if "kind" in doc:
        kwargs["kind"] = _as_str(doc["kind"], f"{path}.kind")
    if "theta" in doc:
        kwargs["theta"] = _as_float(doc["theta"], f"{path}.theta")
    if "qubit_amplitudes" in doc:
        raw = doc["qubit_amplitudes"]
        if not isinstance(raw, list):
            _fail(f"{path}.qubit_amplitudes", "expected a list")
        kwargs["qubit_amplitudes"] = tuple(
            _as_complex(v, f"{path}.qubit_amplitudes[{i}]") for i, v in enumerate(raw)
        )
    for name in ("alpha_mech", "alpha_cav"):
        if name in doc:
            kwargs[name] = _as_complex(doc[name], f"{path}.{name}")
    try:
        return InitialStateSpec(**kwargs)
    except ValueError as exc:
        _fail(path, str(exc))


def _parse_propagator(doc: dict, path: str) -> PropagatorConfig:
    allowed = {"backend", "krylov_dim", "step_tolerance", "max_substep"}
    _reject_unknown(doc, allowed, path)
    kwargs: dict[str, Any] = {}
    if "backend" in doc:
        kwargs["backend"] = _as_str(doc["backend"], f"{path}.backend")
    if "krylov_dim" in doc:
        kwargs["krylov_dim"] = _as_int(doc["krylov_dim"], f"{path}.krylov_dim")
    for name in ("step_tolerance", "max_substep"):
        if name in doc:
            kwargs[name] = _as_float(doc[name], f"{path}.{name}")
    try:
        return PropagatorConfig(**kwargs)
    except ValueError as exc:
        _fail(path, str(exc))


def _parse_analysis(doc: dict, path: str) -> AnalysisOptions:
    allowed = {"wigner_points", "wigner_extent", "eta_tol"}
    _reject_unknown(doc, allowed, path)
    kwargs: dict[str, Any] = {}
    if "wigner_points" in doc:
        kwargs["wigner_points"] = _as_int(doc["wigner_points"], f"{path}.wigner_points")
    if "wigner_extent" in doc and doc["wigner_extent"] is not None:
        kwargs["wigner_extent"] = _as_float(doc["wigner_extent"], f"{path}.wigner_extent")
    if "eta_tol" in doc:
        kwargs["eta_tol"] = _as_float(doc["eta_tol"], f"{path}.eta_tol")
    return AnalysisOptions(**kwargs)


def _parse_axis(doc, path: str) -> SweepAxis:
    doc = _expect_mapping(doc, path)
    allowed = {"name", "start", "stop", "count"}
    _reject_unknown(doc, allowed, path)
    for key in allowed:
        if key not in doc:
            _fail(f"{path}.{key}", "missing required key")
    try:
        return SweepAxis(
            name=_as_str(doc["name"], f"{path}.name"),
            start=_as_float(doc["start"], f"{path}.start"),
            stop=_as_float(doc["stop"], f"{path}.stop"),
            count=_as_int(doc["count"], f"{path}.count"),
        )
    except ValueError as exc:
        _fail(path, str(exc))


def _parse_run(doc: dict, path: str):
    kind = doc.get("kind")
    if kind is None:
        _fail(f"{path}.kind", "missing required key")
    if kind == "trajectory":
        _reject_unknown(doc, {"kind", "t_max", "samples"}, path)
        if "t_max" not in doc:
            _fail(f"{path}.t_max", "missing required key")
        kwargs = {"t_max": _as_float(doc["t_max"], f"{path}.t_max")}
        if "samples" in doc:
            kwargs["samples"] = _as_int(doc["samples"], f"{path}.samples")
        run = TrajectoryRun(**kwargs)
        if run.t_max <= 0 or run.samples < 2:
            _fail(path, "t_max must be positive and samples >= 2")
        return run
    if kind == "snapshot":
        _reject_unknown(doc, {"kind", "times", "wigner", "fock"}, path)
        if "times" not in doc or not isinstance(doc["times"], list) or not doc["times"]:
            _fail(f"{path}.times", "expected a nonempty list of times")
        times = tuple(
            _as_float(v, f"{path}.times[{i}]") for i, v in enumerate(doc["times"])
        )
        if any(t < 0 for t in times) or list(times) != sorted(times):
            _fail(f"{path}.times", "times must be nondecreasing and >= 0")
        kwargs: dict[str, Any] = {"times": times}
        if "wigner" in doc:
            kwargs["wigner"] = _as_bool(doc["wigner"], f"{path}.wigner")
        if "fock" in doc:
            kwargs["fock"] = _as_bool(doc["fock"], f"{path}.fock")
        return SnapshotRun(**kwargs)
    if kind == "sweep":
        _reject_unknown(
            doc, {"kind", "axis1", "axis2", "observable", "snapshot_time"}, path
        )
        for key in ("axis1", "axis2"):
            if key not in doc:
                _fail(f"{path}.{key}", "missing required key")
        kwargs = {
            "axis1": _parse_axis(doc["axis1"], f"{path}.axis1"),
            "axis2": _parse_axis(doc["axis2"], f"{path}.axis2"),
        }
        if "observable" in doc:
            kwargs["observable"] = _as_str(doc["observable"], f"{path}.observable")
        if "snapshot_time" in doc:
            kwargs["snapshot_time"] = _as_float(
                doc["snapshot_time"], f"{path}.snapshot_time"
            )
        run = SweepRun(**kwargs)
        if run.axis1.name == run.axis2.name:
            _fail(path, "sweep axes must be distinct")
        if run.observable not in ("zeta", "qfi_max", "phonon_population"):
            _fail(f"{path}.observable", f"unknown observable {run.observable!r}")
        if run.snapshot_time < 0:
            _fail(f"{path}.snapshot_time", "must be >= 0")
        return run
    _fail(f"{path}.kind", f"unknown run kind {kind!r}")


def deep_merge(base: dict, extra: dict) -> dict:
    """Recursive dict merge; values from ``extra`` win.

    Tagged sections (those carrying a ``kind``) are replaced wholesale when
    the extra document changes the kind, so switching e.g. a trajectory run
    to a snapshot run does not inherit stale keys.
    """
    merged = dict(base)
    for key, value in extra.items():
        current = merged.get(key)
        if (
            isinstance(value, dict)
            and isinstance(current, dict)
            and not (
                "kind" in value and "kind" in current and value["kind"] != current["kind"]
            )
        ):
            merged[key] = deep_merge(current, value)
        else:
            merged[key] = value
    return merged


def parse_document(doc: dict) -> RunConfig:
    """Validate a configuration document (after any preset expansion)."""
    doc = _expect_mapping(doc, "<config>")
    allowed = {
        "preset",
        "model",
        "state",
        "space",
        "propagator",
        "analysis",
        "run",
        "check_convergence",
        "convergence_factor",
        "top_fock_tol",
        "output_dir",
    }
    _reject_unknown(doc, allowed, "")

    preset = doc.get("preset")
    if preset is not None:
        preset = _as_str(preset, "preset")
        if preset not in PRESETS:
            _fail("preset", f"unknown preset {preset!r}; known: {sorted(PRESETS)}")
        doc = deep_merge(PRESETS[preset], {k: v for k, v in doc.items() if k != "preset"})

    missing = [key for key in _REQUIRED_SECTIONS if key not in doc]
    if missing:
        raise ConfigError(
            "missing required sections: " + ", ".join(missing)
            + " (or name a preset)"
        )

    space_doc = _expect_mapping(doc["space"], "space")
    _reject_unknown(space_doc, {"dim_mech", "dim_cav"}, "space")
    for key in ("dim_mech", "dim_cav"):
        if key not in space_doc:
            _fail(f"space.{key}", "missing required key")
    dim_mech = _as_int(space_doc["dim_mech"], "space.dim_mech")
    dim_cav = _as_int(space_doc["dim_cav"], "space.dim_cav")
    if dim_mech < 2 or dim_cav < 2:
        _fail("space", "Fock truncations must be >= 2")

    config = RunConfig(
        model=_parse_model(_expect_mapping(doc["model"], "model"), "model"),
        state=_parse_state(_expect_mapping(doc["state"], "state"), "state"),
        dim_mech=dim_mech,
        dim_cav=dim_cav,
        propagator=_parse_propagator(
            _expect_mapping(doc.get("propagator", {}), "propagator"), "propagator"
        ),
        analysis=_parse_analysis(
            _expect_mapping(doc.get("analysis", {}), "analysis"), "analysis"
        ),
        run=_parse_run(_expect_mapping(doc["run"], "run"), "run"),
        preset=preset,
        check_convergence=_as_bool(doc.get("check_convergence", True), "check_convergence"),
        convergence_factor=_as_float(doc.get("convergence_factor", 1.5), "convergence_factor"),
        top_fock_tol=_as_float(doc.get("top_fock_tol", 1e-8), "top_fock_tol"),
        output_dir=_as_str(doc.get("output_dir", "out"), "output_dir"),
    )
    _validate_cross_fields(config)
    return config


def _validate_cross_fields(config: RunConfig):
    kind_qubits = {"single_superposition": 1, "two_qubit_phase": 2}
    need = kind_qubits.get(config.state.kind)
    if need is not None and config.model.n_qubits != need:
        raise ConfigError(
            f"state.kind {config.state.kind!r} requires n_qubits={need}, "
            f"model has {config.model.n_qubits}"
        )
    if config.convergence_factor <= 1.0:
        raise ConfigError("convergence_factor must exceed 1")


def parse_config(text: str) -> RunConfig:
    """Parse a JSON configuration document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc
    return parse_document(doc)


# ---------------------------------------------------------------------------
# emission (lossless round trip)
# ---------------------------------------------------------------------------


def _json_safe(value):
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return value
    if isinstance(value, complex):
        return [_json_safe(value.real), _json_safe(value.imag)]
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def config_to_document(config: RunConfig) -> dict:
    """Fully resolved document; feeding it back to parse_config is lossless."""
    model = asdict(config.model)
    state = {
        "kind": config.state.kind,
        "theta": config.state.theta,
        "alpha_mech": config.state.alpha_mech,
        "alpha_cav": config.state.alpha_cav,
    }
    if config.state.qubit_amplitudes is not None:
        state["qubit_amplitudes"] = list(config.state.qubit_amplitudes)
    propagator = {
        "backend": config.propagator.backend,
        "krylov_dim": config.propagator.krylov_dim,
        "step_tolerance": config.propagator.step_tolerance,
        "max_substep": config.propagator.max_substep,
    }
    analysis = asdict(config.analysis)
    run: dict[str, Any] = {"kind": config.run.kind}
    if isinstance(config.run, TrajectoryRun):
        run.update({"t_max": config.run.t_max, "samples": config.run.samples})
    elif isinstance(config.run, SnapshotRun):
        run.update(
            {
                "times": list(config.run.times),
                "wigner": config.run.wigner,
                "fock": config.run.fock,
            }
        )
    else:
        run.update(
            {
                "axis1": asdict(config.run.axis1),
                "axis2": asdict(config.run.axis2),
                "observable": config.run.observable,
                "snapshot_time": config.run.snapshot_time,
            }
        )
    doc = {
        "model": model,
        "state": state,
        "space": {"dim_mech": config.dim_mech, "dim_cav": config.dim_cav},
        "propagator": propagator,
        "analysis": analysis,
        "run": run,
        "check_convergence": config.check_convergence,
        "convergence_factor": config.convergence_factor,
        "top_fock_tol": config.top_fock_tol,
        "output_dir": config.output_dir,
    }
    if config.preset is not None:
        doc["preset"] = config.preset
    return _json_safe(doc)


def emit_config(config: RunConfig) -> str:
    return json.dumps(config_to_document(config), indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# overrides
# ---------------------------------------------------------------------------


def parse_override(text: str) -> dict:
    """Turn ``a.b.c=value`` into a nested single-key document."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} must look like path=value")
    raw_path, raw_value = text.split("=", 1)
    keys = [k for k in raw_path.strip().split(".") if k]
    if not keys:
        raise ConfigError(f"override {text!r} has an empty path")
    try:
        value: Any = json.loads(raw_value)
    except json.JSONDecodeError:
        value = raw_value  # plain strings (e.g. backend names, "inf")
    doc: dict[str, Any] = {keys[-1]: value}
    for key in reversed(keys[:-1]):
        doc = {key: doc}
    return doc


def apply_overrides(doc: dict, overrides: list[str]) -> dict:
    merged = doc
    for item in overrides:
        merged = deep_merge(merged, parse_override(item))
    return merged
