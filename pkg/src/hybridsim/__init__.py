"""Closed-system simulator for a driven qubit/mechanics/cavity stack.

Public surface: composite-space construction and initial states
(`hilbert`), the dimensionless Hamiltonian (`model`), Krylov/dense time
evolution (`propagator`), mechanical-mode diagnostics (`analysis`),
parameter sweeps (`sweep`) and configuration/presets (`config`, `cli`).
"""

__version__ = "0.1.0"

from .analysis import (
    MechanicalDensityMatrix,
    QfiMax,
    QuadratureForm,
    WignerGrid,
    default_extent,
    fock_distribution,
    negativity_ratio,
    qfi_form,
    qfi_max,
    quadrature_operators,
    reduce_to_mechanical,
    wigner,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    CoverageError,
    HybridSimError,
    SweepError,
    TruncationError,
)
from .hilbert import (
    CompositeSpace,
    InitialStateSpec,
    SparseOperator,
    build_initial_state,
    coherent_state,
    ladder_operator,
    make_space,
    number_operator,
    partial_trace_mech,
    qubit_operator,
)
from .model import (
    HamiltonianPair,
    ModelParams,
    build_hamiltonian,
    drive_schedule,
    hamiltonian_pair,
)
from .propagator import (
    ConvergenceReport,
    PropagatorConfig,
    TrajectoryRecord,
    convergence_check,
    evolve,
    state_at,
)
from .sweep import SweepAxis, SweepResult, SweepSpec, evaluate_cell, run_sweep

__all__ = [name for name in dir() if not name.startswith("_")]
