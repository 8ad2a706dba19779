"""Hamiltonian assembly and the boxcar drive schedule."""

import math

import numpy as np
import pytest

from hybridsim import (
    ModelParams,
    build_hamiltonian,
    drive_schedule,
    hamiltonian_pair,
    ladder_operator,
    make_space,
    number_operator,
)


def fig2_params():
    return ModelParams(w_q=1.0, G_qm=0.05, G_mc=2.0, D=0.0, E0=0.3,
                       tau_c=math.pi, n_qubits=2)


class TestBuildHamiltonian:
    def test_uncoupled_diagonal_spectrum(self):
        space = make_space(1, 3, 3)
        params = ModelParams(w_q=1.0, G_qm=0.0, G_mc=0.0, D=0.0, E0=0.0,
                             tau_c=0.0, n_qubits=1)
        h = build_hamiltonian(space, params, 0.0).matrix.toarray()
        assert np.allclose(h, np.diag(np.diag(h)))
        qw, nw, _ = space.excitation_weights()
        assert np.allclose(np.diag(h).real, qw + nw)
        assert np.diag(h).real.min() == 0.0

    def test_resonant_doublet_splitting(self):
        space = make_space(1, 3, 2)
        params = ModelParams(w_q=1.0, G_qm=0.05, G_mc=0.0, D=0.0, E0=0.0,
                             tau_c=0.0, n_qubits=1)
        h = build_hamiltonian(space, params, 0.0).matrix.toarray()
        i = space.flat_index(1, 0, 0)  # |e,0>
        j = space.flat_index(0, 1, 0)  # |g,1>
        block = h[np.ix_([i, j], [i, j])]
        eigs = np.linalg.eigvalsh(block)
        assert eigs[1] - eigs[0] == pytest.approx(2 * params.G_qm, abs=1e-14)

    def test_hermiticity_exact(self):
        space = make_space(2, 10, 8)
        h = build_hamiltonian(space, fig2_params(), 0.3)
        defect = h.matrix - h.matrix.conj().T
        assert defect.nnz == 0 or abs(defect).max() == 0.0
        assert h.hermitian

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            build_hamiltonian(make_space(1, 4, 4), fig2_params(), 0.0)

    def test_drive_difference_exact(self):
        space = make_space(2, 6, 6)
        pair = hamiltonian_pair(space, fig2_params())
        a = ladder_operator(space, "cav").matrix
        expected = fig2_params().E0 * (a + a.conj().T)
        diff = pair.h_on.matrix - pair.h_off.matrix - expected
        assert diff.nnz == 0 or abs(diff).max() == 0.0

    def test_photon_number_conserved_without_drive(self):
        space = make_space(2, 6, 6)
        h_off = hamiltonian_pair(space, fig2_params()).h_off.matrix
        n_cav = number_operator(space, "cav").matrix
        comm = h_off @ n_cav - n_cav @ h_off
        assert comm.nnz == 0 or abs(comm).max() == 0.0

    def test_total_excitation_conserved_without_optomechanics(self):
        space = make_space(2, 6, 6)
        params = ModelParams(w_q=1.0, G_qm=0.05, G_mc=0.0, D=0.3, E0=0.0,
                             tau_c=0.0, n_qubits=2)
        h = build_hamiltonian(space, params, 0.0).matrix
        qw, nw, _ = space.excitation_weights()
        n_exc = np.diag(qw + nw)
        comm = h @ n_exc - n_exc @ h
        comm = np.asarray(comm)
        assert np.abs(comm).max() == 0.0

    def test_detuning_sign(self):
        space = make_space(1, 2, 3)
        params = ModelParams(w_q=1.0, G_qm=0.0, G_mc=0.0, D=0.7, E0=0.0,
                             tau_c=0.0, n_qubits=1)
        h = build_hamiltonian(space, params, 0.0).matrix
        i = space.flat_index(0, 0, 2)
        assert h.toarray()[i, i].real == pytest.approx(-2 * 0.7)


class TestDriveSchedule:
    def test_boxcar(self):
        params = ModelParams(E0=0.3, tau_c=math.pi)
        assert drive_schedule(params, 1.0) == 0.3
        assert drive_schedule(params, math.pi) == 0.3
        assert drive_schedule(params, 4.0) == 0.0

    def test_always_on(self):
        params = ModelParams(E0=0.5, tau_c=math.inf)
        assert drive_schedule(params, 1e6) == 0.5

    def test_never_on(self):
        params = ModelParams(E0=0.5, tau_c=0.0)
        assert drive_schedule(params, 0.0) == 0.0
        assert drive_schedule(params, 2.0) == 0.0

    def test_negative_time_rejected(self):
        with pytest.raises(ValueError):
            drive_schedule(ModelParams(), -0.1)


class TestModelParams:
    def test_rejects_nonfinite_coupling(self):
        with pytest.raises(ValueError):
            ModelParams(G_mc=math.inf)

    def test_rejects_bad_qubit_frequency(self):
        with pytest.raises(ValueError):
            ModelParams(w_q=0.0)

    def test_rejects_negative_switch_time(self):
        with pytest.raises(ValueError):
            ModelParams(tau_c=-1.0)

    def test_infinite_switch_time_allowed(self):
        assert ModelParams(tau_c=math.inf).tau_c == math.inf
