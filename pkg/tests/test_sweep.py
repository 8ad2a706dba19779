"""Sweep grid mechanics: determinism, parallel equivalence, failure handling."""

import math

import numpy as np
import pytest

from hybridsim import (
    InitialStateSpec,
    ModelParams,
    PropagatorConfig,
    SweepAxis,
    SweepSpec,
    SweepError,
    run_sweep,
)


def tiny_spec(observable="zeta", axis2=None, alpha=0.3, couplings_off=True):
    params = ModelParams(
        w_q=1.0,
        G_qm=0.0 if couplings_off else 0.05,
        G_mc=0.0 if couplings_off else 0.4,
        D=0.0,
        E0=0.0 if couplings_off else 0.2,
        tau_c=1.0,
        n_qubits=1,
    )
    state = InitialStateSpec(kind="single_superposition", alpha_cav=alpha)
    return SweepSpec(
        axis1=SweepAxis("theta", 0.0, math.pi, 2),
        axis2=axis2 or SweepAxis("D", -0.5, 0.5, 2),
        params=params,
        state=state,
        dim_mech=12,
        dim_cav=12,
        propagator=PropagatorConfig(sample_times=(0.0,)),
        observable=observable,
        snapshot_time=1.0,
        wigner_points=101,
    )


class TestSweepSpecValidation:
    def test_rejects_duplicate_axes(self):
        with pytest.raises(ValueError, match="distinct"):
            tiny_spec(axis2=SweepAxis("theta", 0.0, 1.0, 2))

    def test_rejects_unknown_axis(self):
        with pytest.raises(ValueError, match="axis"):
            SweepAxis("w_q", 0.0, 1.0, 3)

    def test_rejects_single_point_axis(self):
        with pytest.raises(ValueError, match="two points"):
            SweepAxis("D", 0.0, 1.0, 1)

    def test_rejects_unknown_observable(self):
        with pytest.raises(ValueError, match="observable"):
            tiny_spec(observable="entropy")


class TestRunSweep:
    def test_gaussian_dynamics_gives_zero_zeta(self):
        # all couplings off: the mechanical mode stays coherent/vacuum
        result = run_sweep(tiny_spec())
        assert result.values.shape == (2, 2)
        assert np.isfinite(result.values).all()
        assert (result.values < 1e-6).all()
        assert not result.failed_cells()

    def test_row_major_layout_and_axis_values(self):
        spec = tiny_spec(observable="phonon_population", couplings_off=False)
        result = run_sweep(spec)
        assert np.allclose(result.axis1_values, [0.0, math.pi])
        assert np.allclose(result.axis2_values, [-0.5, 0.5])

    def test_two_runs_bitwise_identical(self):
        spec = tiny_spec(observable="qfi_max", couplings_off=False)
        first = run_sweep(spec)
        second = run_sweep(spec)
        assert np.array_equal(first.values, second.values)

    def test_parallel_matches_serial_bitwise(self):
        spec = tiny_spec(observable="phonon_population", couplings_off=False)
        serial = run_sweep(spec, parallelism=1)
        parallel = run_sweep(spec, parallelism=2)
        assert np.array_equal(serial.values, parallel.values)
        assert serial.flags == parallel.flags

    def test_failed_cell_flagged_not_fatal(self):
        # alpha_cav = 2.3 cannot fit in a 24-level cavity: that column must
        # carry NaNs and diagnostics (2 of 22 cells, under the 10% limit)
        # while the sweep as a whole succeeds
        from dataclasses import replace

        spec = replace(
            tiny_spec(axis2=SweepAxis("alpha_cav", 0.3, 2.3, 11), couplings_off=False),
            dim_cav=24,
        )
        result = run_sweep(spec)
        flagged = result.failed_cells()
        assert flagged, "expected the extreme-amplitude column to fail"
        for i, j, msg in flagged:
            assert math.isnan(result.values[i, j])
            assert "Truncation" in msg or "leak" in msg
        finite = result.values[np.isfinite(result.values)]
        assert finite.size == result.values.size - len(flagged)

    def test_sweep_aborts_when_most_cells_fail(self):
        spec = tiny_spec(
            axis2=SweepAxis("alpha_cav", 2.5, 4.0, 4), couplings_off=False
        )
        with pytest.raises(SweepError, match="cells failed"):
            run_sweep(spec)

    def test_phonon_observable_matches_direct_simulation(self):
        from hybridsim import build_initial_state, make_space, reduce_to_mechanical, state_at

        spec = tiny_spec(observable="phonon_population", couplings_off=False)
        result = run_sweep(spec)
        space = make_space(1, spec.dim_mech, spec.dim_cav)
        psi0 = build_initial_state(space, spec.state)
        from dataclasses import replace

        params = replace(spec.params, D=0.5)
        state = state_at(space, params, psi0, spec.snapshot_time, spec.propagator)
        rho = reduce_to_mechanical(space, state)
        assert result.values[0, 1] == rho.phonon_mean()
