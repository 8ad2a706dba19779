"""Truncated composite Hilbert space and the elementary objects living in it.

The composite space is the tensor product (qubit register) x (mechanical
mode) x (cavity mode).  Basis ordering is fixed once and for all:

* qubit configurations come first and qubit 1 occupies the most
  significant bit (bit value 1 = |e>, 0 = |g>),
* the mechanical Fock index varies next,
* the cavity Fock index varies fastest.

A flat index therefore reads ``(q * dim_mech + n) * dim_cav + m``.  Pure
states are plain complex ``numpy`` vectors over this flat basis; all
constructors in this module return unit-norm vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.special import gammaln

from .errors import TruncationError

# Leakage a truncated coherent state may lose before it is rejected.
COHERENT_LEAKAGE_TOL = 1e-10


@dataclass(frozen=True)
class CompositeSpace:
    """Dimensions and index maps of the qubits x mech x cavity product space."""

    n_qubits: int
    dim_mech: int
    dim_cav: int

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("need at least one qubit")
        if self.dim_mech < 2 or self.dim_cav < 2:
            raise ValueError("bosonic truncations must be >= 2")
        if self.total_dim <= 0 or self.n_qubits > 60:
            raise ValueError("composite dimension overflows")

    @property
    def dim_qubits(self) -> int:
        return 1 << self.n_qubits

    @property
    def total_dim(self) -> int:
        return self.dim_qubits * self.dim_mech * self.dim_cav

    def flat_index(self, q: int, n: int, m: int) -> int:
        if not (0 <= q < self.dim_qubits and 0 <= n < self.dim_mech and 0 <= m < self.dim_cav):
            raise IndexError("subsystem index out of range")
        return (q * self.dim_mech + n) * self.dim_cav + m

    def split_index(self, i: int) -> tuple[int, int, int]:
        if not (0 <= i < self.total_dim):
            raise IndexError("flat index out of range")
        i, m = divmod(i, self.dim_cav)
        q, n = divmod(i, self.dim_mech)
        return q, n, m

    def index_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(q, n, m) subsystem indices for every flat index, as int arrays."""
        idx = np.arange(self.total_dim)
        m = idx % self.dim_cav
        n = (idx // self.dim_cav) % self.dim_mech
        q = idx // (self.dim_cav * self.dim_mech)
        return q, n, m

    def excitation_weights(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Diagonal weights of (sum_j |e><e|_j, b^dag b, a^dag a)."""
        q, n, m = self.index_arrays()
        qubit = np.zeros(self.total_dim)
        for bit in range(self.n_qubits):
            qubit += (q >> bit) & 1
        return qubit, n.astype(float), m.astype(float)


@dataclass(frozen=True, eq=False)
class SparseOperator:
    """Sparse operator over a composite space, with an exact-Hermiticity flag."""

    matrix: sp.csr_matrix
    hermitian: bool = False

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return self.matrix.dot(vec)

    def expectation(self, vec: np.ndarray):
        val = np.vdot(vec, self.matrix.dot(vec))
        return val.real if self.hermitian else val

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def __add__(self, other: "SparseOperator") -> "SparseOperator":
        return SparseOperator(
            (self.matrix + other.matrix).tocsr(),
            hermitian=self.hermitian and other.hermitian,
        )


@dataclass(frozen=True)
class InitialStateSpec:
    """Recipe for the product state (qubits) x (mech coherent) x (cavity coherent).

    ``kind`` selects the qubit factor:

    * ``single_superposition`` -- (|e> + |g>)/sqrt(2), one qubit,
    * ``two_qubit_phase``      -- (|eg> + e^{i theta}|ge>)/sqrt(2), two qubits,
    * ``explicit``             -- ``qubit_amplitudes`` over the 2^N register.
    """

    kind: str = "two_qubit_phase"
    theta: float = 0.0
    qubit_amplitudes: tuple[complex, ...] | None = None
    alpha_mech: complex = 0j
    alpha_cav: complex = 0j

    KINDS = ("single_superposition", "two_qubit_phase", "explicit")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown initial-state kind {self.kind!r}")
        if self.kind == "explicit" and not self.qubit_amplitudes:
            raise ValueError("explicit initial state needs qubit_amplitudes")


def make_space(n_qubits: int, dim_mech: int, dim_cav: int) -> CompositeSpace:
    """Build a composite space; rejects degenerate or overflowing dimensions."""
    return CompositeSpace(n_qubits, dim_mech, dim_cav)


def _embed(space: CompositeSpace, qubit_part, mech_part, cav_part) -> sp.csr_matrix:
    """Kronecker-embed single-subsystem blocks; ``None`` means identity."""
    q = sp.identity(space.dim_qubits, format="csr") if qubit_part is None else qubit_part
    n = sp.identity(space.dim_mech, format="csr") if mech_part is None else mech_part
    c = sp.identity(space.dim_cav, format="csr") if cav_part is None else cav_part
    return sp.kron(q, sp.kron(n, c, format="csr"), format="csr")


def _destroy(dim: int) -> sp.csr_matrix:
    return sp.diags(np.sqrt(np.arange(1.0, dim)), offsets=1, format="csr")


def ladder_operator(space: CompositeSpace, subsystem: str) -> SparseOperator:
    """Annihilation operator of ``subsystem`` ("mech" or "cav"), identity elsewhere."""
    if subsystem == "mech":
        mat = _embed(space, None, _destroy(space.dim_mech), None)
    elif subsystem == "cav":
        mat = _embed(space, None, None, _destroy(space.dim_cav))
    else:
        raise ValueError(f"unknown subsystem {subsystem!r}")
    return SparseOperator(mat, hermitian=False)


def number_operator(space: CompositeSpace, subsystem: str) -> SparseOperator:
    """Occupation-number operator with exactly integer diagonal entries."""
    if subsystem == "mech":
        mat = _embed(space, None, sp.diags(np.arange(float(space.dim_mech))), None)
    elif subsystem == "cav":
        mat = _embed(space, None, None, sp.diags(np.arange(float(space.dim_cav))))
    else:
        raise ValueError(f"unknown subsystem {subsystem!r}")
    return SparseOperator(mat.tocsr(), hermitian=True)


_QUBIT_BLOCKS = {
    # 2x2 blocks in the single-qubit basis (index 0 = |g>, 1 = |e>)
    "sigma_plus": np.array([[0.0, 0.0], [1.0, 0.0]]),
    "sigma_minus": np.array([[0.0, 1.0], [0.0, 0.0]]),
    "sigma_z": np.array([[-1.0, 0.0], [0.0, 1.0]]),
    "identity_proj": np.eye(2),
}


def qubit_operator(space: CompositeSpace, j: int, kind: str) -> SparseOperator:
    """Single-qubit operator on qubit ``j`` (1-based), identity elsewhere."""
    if not 1 <= j <= space.n_qubits:
        raise ValueError(f"qubit index {j} out of range 1..{space.n_qubits}")
    if kind not in _QUBIT_BLOCKS:
        raise ValueError(f"unknown qubit operator kind {kind!r}")
    block = sp.csr_matrix(_QUBIT_BLOCKS[kind])
    left = sp.identity(1 << (j - 1), format="csr")
    right = sp.identity(1 << (space.n_qubits - j), format="csr")
    qpart = sp.kron(left, sp.kron(block, right), format="csr")
    herm = kind in ("sigma_z", "identity_proj")
    return SparseOperator(_embed(space, qpart, None, None), hermitian=herm)


def coherent_state(dim: int, alpha: complex) -> np.ndarray:
    """Truncated coherent-state amplitudes c_n ~ alpha^n / sqrt(n!), renormalized.

    Amplitudes are formed in the log domain so that large |alpha| does not
    overflow.  Rejects truncations whose pre-renormalization leakage
    1 - sum |c_n|^2 exceeds ``COHERENT_LEAKAGE_TOL``.
    """
    if dim < 1:
        raise ValueError("dimension must be positive")
    alpha = complex(alpha)
    if alpha == 0:
        vec = np.zeros(dim, dtype=complex)
        vec[0] = 1.0
        return vec
    n = np.arange(dim)
    log_mag = n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1.0) - 0.5 * abs(alpha) ** 2
    weights = np.exp(2.0 * log_mag)
    leakage = 1.0 - weights.sum()
    if leakage >= COHERENT_LEAKAGE_TOL:
        raise TruncationError(
            f"coherent state |alpha|={abs(alpha):.4g} leaks {leakage:.3e} "
            f"outside {dim} Fock levels (tolerance {COHERENT_LEAKAGE_TOL:g})"
        )
    vec = np.exp(log_mag + 1j * n * np.angle(alpha))
    return vec / np.linalg.norm(vec)


def _qubit_register(space: CompositeSpace, spec: InitialStateSpec) -> np.ndarray:
    if spec.kind == "single_superposition":
        if space.n_qubits != 1:
            raise ValueError("single_superposition requires exactly one qubit")
        return np.array([1.0, 1.0], dtype=complex) / math.sqrt(2.0)
    if spec.kind == "two_qubit_phase":
        if space.n_qubits != 2:
            raise ValueError("two_qubit_phase requires exactly two qubits")
        vec = np.zeros(4, dtype=complex)
        vec[0b10] = 1.0  # |eg>
        vec[0b01] = np.exp(1j * spec.theta)  # |ge>
        return vec / math.sqrt(2.0)
    amps = np.asarray(spec.qubit_amplitudes, dtype=complex)
    if amps.shape != (space.dim_qubits,):
        raise ValueError(
            f"explicit qubit amplitudes must have length {space.dim_qubits}, "
            f"got {amps.shape}"
        )
    norm = np.linalg.norm(amps)
    if norm == 0:
        raise ValueError("explicit qubit amplitudes are all zero")
    return amps / norm


def build_initial_state(space: CompositeSpace, spec: InitialStateSpec) -> np.ndarray:
    """Unit-norm product state (qubit register) x |alpha_mech> x |alpha_cav>."""
    qubit = _qubit_register(space, spec)
    mech = coherent_state(space.dim_mech, spec.alpha_mech)
    cav = coherent_state(space.dim_cav, spec.alpha_cav)
    psi = np.kron(qubit, np.kron(mech, cav))
    return psi / np.linalg.norm(psi)


def partial_trace_mech(space: CompositeSpace, psi: np.ndarray) -> np.ndarray:
    """Trace qubits and cavity out of a pure state; returns the raw matrix.

    rho[n, n'] = sum_{q,m} psi[q,n,m] conj(psi[q,n',m]); exactly Hermitian by
    construction up to floating-point commutativity, so the result is
    symmetrized before it is returned.
    """
    if psi.shape != (space.total_dim,):
        raise ValueError("state length does not match the composite space")
    block = psi.reshape(space.dim_qubits, space.dim_mech, space.dim_cav)
    rho = np.einsum("qnm,qkm->nk", block, block.conj())
    return 0.5 * (rho + rho.conj().T)
