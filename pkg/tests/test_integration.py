import numpy as np
import pytest

from crncycles.integration import (
    IntegratorSettings,
    StepSizeUnderflow,
    batch_integrate,
    integrate,
)
from crncycles.odes import Monomial, PolyOdeSystem
from crncycles.systems import CenterField, CenterSet, Family, default_centers, slow_manifold_v

ROTATION = PolyOdeSystem(
    2, [[Monomial(-1.0, (0, 1))], [Monomial(1.0, (1, 0))]], names=("X", "Y")
)


class TestSettings:
    def test_defaults(self):
        s = IntegratorSettings()
        assert (s.rel_tol, s.abs_tol, s.max_step) == (1e-9, 1e-11, 0.1)
        assert (s.t_end, s.dense_stride) == (100.0, 0.01)

    def test_validation(self):
        with pytest.raises(ValueError):
            IntegratorSettings(rel_tol=1e-15)
        with pytest.raises(ValueError):
            IntegratorSettings(max_step=0.0)
        with pytest.raises(ValueError):
            IntegratorSettings(t_end=-1.0)


class TestIntegrate:
    def test_rigid_rotation_closes(self):
        s = IntegratorSettings(t_end=2 * np.pi, dense_stride=0.05)
        tr = integrate(ROTATION, [1.0, 0.0], s)
        assert np.linalg.norm(tr.final_state - [1.0, 0.0]) < 1e-6

    def test_dense_sampling_grid(self):
        s = IntegratorSettings(t_end=1.0, dense_stride=0.25)
        tr = integrate(ROTATION, [1.0, 0.0], s)
        assert np.allclose(tr.times, [0.0, 0.25, 0.5, 0.75, 1.0])
        assert np.all(np.diff(tr.times) > 0)

    def test_zero_horizon_single_row(self):
        tr = integrate(ROTATION, [1.0, 0.0], IntegratorSettings(t_end=0.0))
        assert tr.times.shape == (1,)
        assert np.array_equal(tr.states[0], [1.0, 0.0])

    def test_planar_cycle_radius(self):
        c = default_centers(1)
        tr = integrate(CenterField(Family.PLANAR, c), [8.1, 8.0], IntegratorSettings(t_end=50.0))
        r_end = np.hypot(tr.final_state[0] - 8, tr.final_state[1] - 8)
        assert abs(r_end - 1.0) < 1e-3

    def test_tolerance_halving_consistency(self):
        # halving both tolerances moves the final state by less than 10x the
        # coarser tolerance
        c = default_centers(1)
        field = CenterField(Family.XFACTOR_FAST_SLOW, c, 1.0)
        x0 = [8.3, 8.0, *slow_manifold_v(c, 8.3, 8.0)]
        coarse = IntegratorSettings(t_end=20.0, rel_tol=2e-9, abs_tol=2e-11)
        fine = IntegratorSettings(t_end=20.0, rel_tol=1e-9, abs_tol=1e-11)
        a = integrate(field, x0, coarse).final_state
        b = integrate(field, x0, fine).final_state
        assert np.max(np.abs(a - b)) < 10 * 2e-9 * np.max(np.abs(a))

    def test_positivity_and_v_cap(self):
        # positive seeds stay positive under the x-factored kinetics and the
        # fast variables settle into (0, 1]
        c = CenterSet.from_pairs([(2, 2), (2, 6), (6, 2), (6, 6)])
        field = CenterField(Family.XFACTOR_FAST_SLOW, c, 1.0)
        x0 = [0.5, 0.5, 1.0, 1.0, 1.0, 1.0]
        tr = integrate(field, x0, IntegratorSettings(t_end=60.0))
        assert np.all(tr.states > 0.0)
        after = tr.states[tr.times >= 20.0, 2:]
        assert np.all(after <= 1.0 + 1e-6)

    def test_axis_invariance(self):
        field = CenterField(Family.XFACTOR_PLANAR, default_centers(1))
        tr = integrate(field, [0.0, 5.0], IntegratorSettings(t_end=10.0))
        assert np.all(tr.states[:, 0] == 0.0)

    def test_divergence_flag(self):
        # doubled reciprocal-variable init makes 1/u cross zero in finite
        # time: a genuine blow-up, reported as a truncated diverged run
        c = default_centers(1)
        field = CenterField(Family.RECIPROCAL, c)
        u0 = 2.0 * slow_manifold_v(c, 9.2, 8.0)
        tr = integrate(field, [9.2, 8.0, *u0], IntegratorSettings(t_end=100.0))
        assert tr.diverged
        assert tr.final_time < 100.0
        assert np.max(np.abs(tr.final_state)) > 1e5

    def test_step_underflow_raises_for_bounded_states(self):
        # relaxation rate 3e14 forces stable steps below the 1e-14 floor
        # while the state itself stays bounded
        stiff = PolyOdeSystem(1, [[Monomial(-3e14, (1,))]])
        with pytest.raises(StepSizeUnderflow):
            integrate(stiff, [1.0], IntegratorSettings(t_end=1.0))

    def test_seed_validation(self):
        with pytest.raises(ValueError):
            integrate(ROTATION, [1.0], IntegratorSettings(t_end=1.0))
        with pytest.raises(ValueError):
            integrate(ROTATION, [np.nan, 0.0], IntegratorSettings(t_end=1.0))

    def test_rejects_unknown_field_type(self):
        with pytest.raises(TypeError):
            integrate(lambda t, y: y, [1.0], IntegratorSettings(t_end=1.0))

    def test_csv_export(self):
        s = IntegratorSettings(t_end=0.5, dense_stride=0.25)
        tr = integrate(ROTATION, [1.0, 0.0], s)
        lines = tr.to_csv().splitlines()
        assert lines[0] == "t,X,Y"
        assert len(lines) == 1 + len(tr.times)


class TestBatch:
    def test_empty(self):
        assert batch_integrate(ROTATION, [], IntegratorSettings(t_end=1.0)) == []

    def test_order_and_error_records(self):
        stiff = PolyOdeSystem(1, [[Monomial(-3e14, (1,))]])
        good = batch_integrate(stiff, [[0.0], [1.0], [0.0]], IntegratorSettings(t_end=0.5))
        assert [r.ok for r in good] == [True, False, True]
        assert "StepSizeUnderflow" in good[1].error
        assert [r.seed for r in good] == [(0.0,), (1.0,), (0.0,)]

    def test_matches_serial(self):
        c = default_centers(1)
        field = CenterField(Family.PLANAR, c)
        seeds = [[8.0 + 0.1 * i, 8.0] for i in range(1, 5)]
        s = IntegratorSettings(t_end=5.0)
        batch = batch_integrate(field, seeds, s, max_workers=2)
        for seed, res in zip(seeds, batch):
            solo = integrate(field, seed, s)
            assert np.array_equal(res.trajectory.states, solo.states)
