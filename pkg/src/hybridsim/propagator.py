"""Piecewise-constant time evolution of pure states.

The boxcar drive yields exactly two Hamiltonians, so a trajectory is a
chain of constant-Hamiltonian segments with the switch-off time an exact
segment boundary.  Within a segment the state is advanced by approximating
``exp(-i H dt)|psi>`` in a Lanczos (Hermitian Krylov) subspace with full
reorthogonalization; the substep is controlled by the Krylov residual.  A
dense-eigendecomposition backend covers small spaces essentially exactly
and doubles as an oracle for the sparse path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh_tridiagonal

from .errors import ConvergenceError
from .hilbert import CompositeSpace, make_space
from .model import ModelParams, hamiltonian_pair

# Residual below which a Krylov space is treated as exactly invariant.
BREAKDOWN_TOL = 1e-13
# Occupancy of the top Fock level above which a truncation is rejected.
TOP_FOCK_TOL = 1e-8
# Hard cap on substeps per segment before giving up.
MAX_SUBSTEPS = 2_000_000

DENSE_DIM_LIMIT = 4096


@dataclass(frozen=True)
class PropagatorConfig:
    """Controls for the time stepper.

    ``sample_times`` must be nondecreasing and nonnegative; every sample is
    an exact stepping target (no interpolation).
    """

    sample_times: tuple[float, ...] = (0.0,)
    backend: str = "krylov"
    krylov_dim: int = 30
    step_tolerance: float = 1e-9
    max_substep: float = 0.1
    store_states: bool = False

    def __post_init__(self):
        if self.backend not in ("krylov", "dense_eigen"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.krylov_dim < 2:
            raise ValueError("krylov_dim must be >= 2")
        if not (self.step_tolerance > 0 and self.max_substep > 0):
            raise ValueError("tolerances must be positive")
        times = np.asarray(self.sample_times, dtype=float)
        if times.size == 0:
            raise ValueError("sample_times must not be empty")
        if times[0] < 0 or np.any(np.diff(times) < 0):
            raise ValueError("sample_times must be nondecreasing and >= 0")


@dataclass
class TrajectoryRecord:
    """Populations (and optionally state snapshots) along a trajectory."""

    times: np.ndarray
    qubit_population: np.ndarray
    phonon_population: np.ndarray
    photon_population: np.ndarray
    states: list[np.ndarray] | None
    error_bound: float

    def population(self, name: str) -> np.ndarray:
        return getattr(self, f"{name}_population")


@dataclass
class ConvergenceReport:
    """Truncation self-check: same trajectory at enlarged Fock cutoffs."""

    tau: float
    base_dims: tuple[int, int]
    enlarged_dims: tuple[int, int]
    phonon_base: float
    phonon_enlarged: float
    phonon_rel_dev: float
    photon_base: float
    photon_enlarged: float
    photon_rel_dev: float
    top_mech_base: float
    top_cav_base: float
    top_mech_enlarged: float
    top_cav_enlarged: float
    passed: bool


class _KrylovStepper:
    """Adaptive Lanczos exp(-iHt) stepper for one Hermitian CSR matrix."""

    def __init__(self, h_csr: sp.csr_matrix, cfg: PropagatorConfig):
        self.h = h_csr
        self.m = min(cfg.krylov_dim, h_csr.shape[0])
        self.tol = cfg.step_tolerance
        self.max_substep = cfg.max_substep
        # Gershgorin bound on the spectral radius; only used to seed step sizes.
        self.hnorm = float(abs(h_csr).sum(axis=1).max()) or 1.0
        self.dt_suggest = min(self.max_substep, self.m / (2.0 * self.hnorm))
        self.error_bound = 0.0
        self.steps = 0

    def _lanczos(self, psi: np.ndarray):
        # Plain three-term recurrence; steps are short enough that Ritz pairs
        # do not converge within one step, so orthogonality loss stays at
        # rounding level and full reorthogonalization would only add cost.
        dim = psi.shape[0]
        v = np.empty((self.m, dim), dtype=complex)
        alphas = np.empty(self.m)
        betas = np.empty(max(self.m - 1, 1))
        v[0] = psi
        for j in range(self.m):
            w = self.h.dot(v[j])
            alphas[j] = np.vdot(v[j], w).real
            w -= alphas[j] * v[j]
            if j > 0:
                w -= betas[j - 1] * v[j - 1]
            b = np.linalg.norm(w)
            if b <= BREAKDOWN_TOL * self.hnorm:
                return v[: j + 1], alphas[: j + 1], betas[:j], b, True
            if j + 1 < self.m:
                betas[j] = b
                v[j + 1] = w / b
            else:
                return v, alphas, betas[: self.m - 1], b, False
        raise AssertionError("unreachable")

    def advance(self, psi: np.ndarray, t_start: float, t_end: float) -> np.ndarray:
        """Advance psi from t_start to t_end under this Hamiltonian."""
        t = t_start
        steps_taken = 0
        while t < t_end:
            v, alphas, betas, beta_res, invariant = self._lanczos(psi)
            k = alphas.size
            if k > 1:
                theta, q = eigh_tridiagonal(alphas, betas)
            else:
                theta, q = alphas.copy(), np.ones((1, 1))
            q0 = q[0, :]
            remaining = t_end - t
            if invariant:
                # the subspace closes on itself; any step is exact up to beta_res
                dt = min(remaining, self.max_substep)
                err = beta_res * dt
            else:
                dt = min(remaining, self.max_substep, self.dt_suggest)
                err = math.inf
                for _ in range(60):
                    err = self._error_estimate(beta_res, q, theta, q0, dt, k)
                    if err <= self.tol:
                        break
                    dt *= max(0.2, 0.9 * (self.tol / err) ** (1.0 / k))
                if err > self.tol:
                    raise ConvergenceError(
                        "Krylov substep failed to reach the requested tolerance; "
                        "increase krylov_dim or step_tolerance"
                    )
                grow = 0.9 * (self.tol / max(err, 1e-300)) ** (1.0 / k)
                self.dt_suggest = dt * min(2.0, max(0.2, grow))
            phases = np.exp(-1j * dt * theta)
            y = q @ (phases * q0)
            psi = y @ v[:k]
            self.error_bound += err
            t = t_end if dt >= remaining else t + dt
            steps_taken += 1
            if steps_taken > MAX_SUBSTEPS:
                raise ConvergenceError("substep budget exhausted within a segment")
        self.steps += steps_taken
        return psi

    @staticmethod
    def _error_estimate(beta_res, q, theta, q0, dt, k):
        """Simpson estimate of beta_res * integral |e_k' exp(-isT) e_1| ds."""
        def tail(s):
            return abs(np.dot(q[k - 1, :], np.exp(-1j * s * theta) * q0))

        return beta_res * dt / 6.0 * (4.0 * tail(0.5 * dt) + tail(dt))


class _DenseStepper:
    """Exact stepper via a cached eigendecomposition; oracle for small spaces."""

    def __init__(self, h_csr: sp.csr_matrix, cfg: PropagatorConfig):
        dim = h_csr.shape[0]
        if dim > DENSE_DIM_LIMIT:
            raise ValueError(
                f"dense_eigen backend limited to dimension {DENSE_DIM_LIMIT}, got {dim}"
            )
        self.eigvals, self.eigvecs = np.linalg.eigh(h_csr.toarray())
        self.error_bound = 0.0
        self.steps = 0

    def advance(self, psi: np.ndarray, t_start: float, t_end: float) -> np.ndarray:
        dt = t_end - t_start
        coeffs = self.eigvecs.conj().T @ psi
        coeffs *= np.exp(-1j * dt * self.eigvals)
        self.steps += 1
        return self.eigvecs @ coeffs


def _make_stepper(h_csr, cfg):
    if cfg.backend == "krylov":
        return _KrylovStepper(h_csr, cfg)
    return _DenseStepper(h_csr, cfg)


def evolve(
    space: CompositeSpace,
    params: ModelParams,
    psi0: np.ndarray,
    config: PropagatorConfig,
) -> TrajectoryRecord:
    """Propagate ``psi0`` and sample populations at ``config.sample_times``.

    The switch-off time ``tau_c`` is honored as an exact segment boundary:
    no substep straddles it.
    """
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (space.total_dim,):
        raise ValueError("initial state length does not match the space")
    if abs(np.linalg.norm(psi0) - 1.0) > 1e-9:
        raise ValueError("initial state must be normalized")

    pair = hamiltonian_pair(space, params)
    steppers = {}

    def stepper_for(tau_end: float):
        on = params.tau_c > 0 and tau_end <= params.tau_c
        key = "on" if on else "off"
        if key not in steppers:
            steppers[key] = _make_stepper(
                (pair.h_on if on else pair.h_off).matrix, config
            )
        return steppers[key]

    qubit_w, phonon_w, photon_w = space.excitation_weights()
    times = [float(t) for t in config.sample_times]
    horizon = times[-1]
    crossing = 0.0 < params.tau_c < horizon

    psi = psi0.copy()
    t = 0.0
    qubit_pop, phonon_pop, photon_pop = [], [], []
    states = [] if config.store_states else None
    for ts in times:
        if crossing and t < params.tau_c < ts:
            psi = stepper_for(params.tau_c).advance(psi, t, params.tau_c)
            t = params.tau_c
        if ts > t:
            psi = stepper_for(ts).advance(psi, t, ts)
            t = ts
        prob = np.abs(psi) ** 2
        qubit_pop.append(float(qubit_w @ prob))
        phonon_pop.append(float(phonon_w @ prob))
        photon_pop.append(float(photon_w @ prob))
        if states is not None:
            states.append(psi.copy())

    return TrajectoryRecord(
        times=np.asarray(times),
        qubit_population=np.asarray(qubit_pop),
        phonon_population=np.asarray(phonon_pop),
        photon_population=np.asarray(photon_pop),
        states=states,
        error_bound=sum(s.error_bound for s in steppers.values()),
    )


def state_at(
    space: CompositeSpace,
    params: ModelParams,
    psi0: np.ndarray,
    tau: float,
    config: PropagatorConfig,
) -> np.ndarray:
    """State vector at a single time (convenience wrapper around evolve)."""
    cfg = replace(config, sample_times=(float(tau),), store_states=True)
    record = evolve(space, params, psi0, cfg)
    return record.states[-1]


def _top_level_occupancies(space: CompositeSpace, psi: np.ndarray):
    prob = (np.abs(psi) ** 2).reshape(space.dim_qubits, space.dim_mech, space.dim_cav)
    return float(prob[:, -1, :].sum()), float(prob[:, :, -1].sum())


def _embed_in(space: CompositeSpace, big: CompositeSpace, psi: np.ndarray) -> np.ndarray:
    block = psi.reshape(space.dim_qubits, space.dim_mech, space.dim_cav)
    out = np.zeros((big.dim_qubits, big.dim_mech, big.dim_cav), dtype=complex)
    out[:, : space.dim_mech, : space.dim_cav] = block
    return out.reshape(big.total_dim)


def convergence_check(
    space: CompositeSpace,
    params: ModelParams,
    psi0: np.ndarray,
    tau: float,
    config: PropagatorConfig,
    factor: float = 1.5,
    memory_budget_bytes: int = 4 << 30,
    top_fock_tol: float = TOP_FOCK_TOL,
) -> ConvergenceReport:
    """Re-run at ceil(factor * N) Fock truncations and compare observables.

    The initial vector is zero-padded into the enlarged space so the check
    isolates truncation of the dynamics from state preparation.  ``passed``
    requires the base run's top Fock levels to stay below ``top_fock_tol``.
    """
    big = make_space(
        space.n_qubits,
        math.ceil(factor * space.dim_mech),
        math.ceil(factor * space.dim_cav),
    )
    # state vectors plus the Krylov basis dominate the footprint
    need = big.total_dim * 16 * (config.krylov_dim + 8)
    if need > memory_budget_bytes:
        raise ConvergenceError(
            f"enlarged truncation needs ~{need / 2**30:.1f} GiB, "
            f"over the {memory_budget_bytes / 2**30:.1f} GiB budget"
        )

    psi_small = state_at(space, params, psi0, tau, config)
    psi_big = state_at(big, params, _embed_in(space, big, psi0), tau, config)

    def pops(sp_, psi_):
        _, w_n, w_m = sp_.excitation_weights()
        prob = np.abs(psi_) ** 2
        return float(w_n @ prob), float(w_m @ prob)

    phonon_s, photon_s = pops(space, psi_small)
    phonon_b, photon_b = pops(big, psi_big)
    top_mech_s, top_cav_s = _top_level_occupancies(space, psi_small)
    top_mech_b, top_cav_b = _top_level_occupancies(big, psi_big)

    def rel(a, b):
        return abs(a - b) / max(abs(b), 1e-12)

    return ConvergenceReport(
        tau=tau,
        base_dims=(space.dim_mech, space.dim_cav),
        enlarged_dims=(big.dim_mech, big.dim_cav),
        phonon_base=phonon_s,
        phonon_enlarged=phonon_b,
        phonon_rel_dev=rel(phonon_s, phonon_b),
        photon_base=photon_s,
        photon_enlarged=photon_b,
        photon_rel_dev=rel(photon_s, photon_b),
        top_mech_base=top_mech_s,
        top_cav_base=top_cav_s,
        top_mech_enlarged=top_mech_b,
        top_cav_enlarged=top_cav_b,
        passed=top_mech_s < top_fock_tol and top_cav_s < top_fock_tol,
    )
