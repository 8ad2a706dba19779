"""Dimensionless rotating-frame Hamiltonian of the driven tripartite stack.

Everything is measured in units of the mechanical quantum (energies divided
by hbar*omega_m, time tau = omega_m * t).  The assembled operator is

    H = (w_q/2) sum_j (sigma_z_j + I_j)  +  b'b  -  D a'a
        + G_qm sum_j (sigma+_j b + sigma-_j b')
        + G_mc a'a (b + b')
        + eps(tau) (a' + a)

with the drive eps(tau) a boxcar: strength ``E0`` while tau <= tau_c, zero
afterwards.  ``tau_c = 0`` means the drive is never on, ``tau_c = inf``
means it never switches off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .hilbert import CompositeSpace, SparseOperator, _destroy, _embed


@dataclass(frozen=True)
class ModelParams:
    """Dimensionless model parameters (couplings in units of hbar*omega_m)."""

    w_q: float = 1.0
    G_qm: float = 0.05
    G_mc: float = 2.0
    D: float = 0.0
    E0: float = 0.3
    tau_c: float = math.pi
    n_qubits: int = 2

    def __post_init__(self):
        for name in ("G_qm", "G_mc", "D", "E0"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if not (math.isfinite(self.w_q) and self.w_q > 0):
            raise ValueError("w_q must be positive and finite")
        if math.isnan(self.tau_c) or self.tau_c < 0:
            raise ValueError("tau_c must be >= 0 (inf allowed)")
        if self.n_qubits < 1:
            raise ValueError("need at least one qubit")


@dataclass(frozen=True, eq=False)
class HamiltonianPair:
    """The two Hamiltonians of the boxcar protocol: drive on and drive off."""

    h_on: SparseOperator
    h_off: SparseOperator


def drive_schedule(params: ModelParams, tau: float) -> float:
    """Drive strength at dimensionless time tau (boxcar on [0, tau_c])."""
    if tau < 0:
        raise ValueError("tau must be >= 0")
    if params.tau_c == 0:
        return 0.0
    return params.E0 if tau <= params.tau_c else 0.0


def build_hamiltonian(
    space: CompositeSpace, params: ModelParams, drive_strength: float
) -> SparseOperator:
    """Assemble the full sparse Hamiltonian at a fixed drive strength.

    Each term is embedded so that Hermitian conjugate pairs occupy mirrored
    sparse entries with identical values; the result is Hermitian exactly,
    not merely to rounding.
    """
    if space.n_qubits != params.n_qubits:
        raise ValueError(
            f"space has {space.n_qubits} qubits but params expect {params.n_qubits}"
        )
    terms = []

    # (w_q/2)(sigma_z + I) per qubit == w_q |e><e|_j: diagonal, assembled exactly.
    qubit_diag, n_diag, m_diag = space.excitation_weights()
    terms.append(sp.diags(params.w_q * qubit_diag + n_diag - params.D * m_diag))

    b = _destroy(space.dim_mech)
    a = _destroy(space.dim_cav)

    if params.G_qm != 0.0:
        for j in range(1, space.n_qubits + 1):
            raising = _embed(space, _qubit_block(space, j), b, None)  # sigma+_j b
            terms.append(params.G_qm * (raising + raising.conj().T))

    if params.G_mc != 0.0:
        n_cav = sp.diags(np.arange(float(space.dim_cav)))
        x_mech = b + b.conj().T
        terms.append(params.G_mc * _embed(space, None, x_mech, n_cav))

    if drive_strength != 0.0:
        terms.append(drive_strength * _embed(space, None, None, a + a.conj().T))

    total = terms[0]
    for term in terms[1:]:
        total = total + term
    return SparseOperator(sp.csr_matrix(total), hermitian=True)


def _qubit_block(space: CompositeSpace, j: int) -> sp.csr_matrix:
    """sigma^+ acting on qubit j inside the 2^N qubit register."""
    block = sp.csr_matrix(np.array([[0.0, 0.0], [1.0, 0.0]]))
    left = sp.identity(1 << (j - 1), format="csr")
    right = sp.identity(1 << (space.n_qubits - j), format="csr")
    return sp.kron(left, sp.kron(block, right), format="csr")


def hamiltonian_pair(space: CompositeSpace, params: ModelParams) -> HamiltonianPair:
    """Drive-on and drive-off Hamiltonians; they differ exactly by E0 (a + a')."""
    return HamiltonianPair(
        h_on=build_hamiltonian(space, params, params.E0),
        h_off=build_hamiltonian(space, params, 0.0),
    )
