import math

import numpy as np
import pytest

from crncycles.cycles import (
    Annulus,
    CycleReport,
    TooShort,
    certify,
    cluster_cycles,
    count_cycles,
    detect_cycle,
    dist_to_cycle,
    equilibrium_scan,
    flux_check,
    loop_hausdorff,
    _reduced_field2d,
)
from crncycles.integration import IntegratorSettings, Trajectory, TrajectoryMeta, integrate
from crncycles.systems import CenterField, CenterSet, Family, default_centers, slow_manifold_v

FIG_B = CenterSet.from_pairs([(2, 2), (2, 4), (4, 2), (4, 4)])

EXPECTED_PERIOD = 13 * math.pi / 4  # unit-circle cycle of the single-center field


def synthetic_circle(period=7.0, radius=1.0, t_end=100.0, stride=0.01):
    times = np.arange(0.0, t_end + stride / 2, stride)
    omega = 2 * np.pi / period
    states = np.column_stack([radius * np.cos(omega * times), radius * np.sin(omega * times)])
    meta = TrajectoryMeta(
        dim=2, seed_state=(radius, 0.0), settings=IntegratorSettings(t_end=t_end),
        accepted_steps=0, rejected_steps=0, status="completed", names=("X", "Y"),
    )
    return Trajectory(times=times, states=states, meta=meta)


class TestAnnulus:
    def test_radii_fixed(self):
        ann = Annulus((8.0, 8.0))
        assert (ann.r_inner_sq, ann.r_outer_sq) == (0.5, 2.0)

    def test_bad_radii(self):
        with pytest.raises(ValueError):
            Annulus((0.0, 0.0), r_inner_sq=2.0, r_outer_sq=0.5)

    def test_contains_loop(self):
        ann = Annulus((0.0, 0.0))
        theta = np.linspace(0, 2 * np.pi, 50)
        assert ann.contains_loop(np.column_stack([np.cos(theta), np.sin(theta)]))
        assert not ann.contains_loop(2.0 * np.column_stack([np.cos(theta), np.sin(theta)]))


class TestFluxCheck:
    def test_single_center_closed_forms(self):
        # outer radial flux is exactly -2/(1 + z1^6 + z2^6), inner is +1/4
        # over the same denominator; both clear 2/9 in magnitude everywhere
        c = default_centers(1)
        outer, inner = flux_check(_reduced_field2d("planar", c), Annulus((8.0, 8.0)), 720)
        assert outer.passed and inner.passed
        assert outer.max_signed_flux <= -2.0 / 9.0 + 1e-12
        assert outer.min_signed_flux >= -2.0 / 1.25 - 1e-12
        assert inner.min_signed_flux >= 2.0 / 9.0 - 1e-12
        theta = np.linspace(0, 2 * np.pi, 720, endpoint=False)
        d_out = 1.0 + 8.0 * (np.cos(theta) ** 6 + np.sin(theta) ** 6)
        assert outer.min_signed_flux == pytest.approx(np.min(-2.0 / d_out), rel=1e-12)
        assert outer.max_signed_flux == pytest.approx(np.max(-2.0 / d_out), rel=1e-12)

    def test_sample_count_floor(self):
        with pytest.raises(ValueError):
            flux_check(_reduced_field2d("planar", default_centers(1)), Annulus((8, 8)), 100)

    def test_margin_property(self):
        c = default_centers(1)
        outer, inner = flux_check(_reduced_field2d("planar", c), Annulus((8.0, 8.0)))
        assert outer.margin == -outer.max_signed_flux
        assert inner.margin == inner.min_signed_flux


class TestEquilibriumScan:
    def test_single_center_bound(self):
        c = default_centers(1)
        val = equilibrium_scan(_reduced_field2d("planar", c), Annulus((8.0, 8.0)), 120)
        assert val == pytest.approx(math.sqrt(2) / 9, abs=2e-4)

    def test_constant_field(self):
        val = equilibrium_scan(lambda x, y: (0.3 * np.ones_like(x), -0.7 * np.ones_like(y)),
                               Annulus((0.0, 0.0)), 100)
        assert val == pytest.approx(0.7, rel=1e-12)

    def test_grid_floor(self):
        with pytest.raises(ValueError):
            equilibrium_scan(_reduced_field2d("planar", default_centers(1)), Annulus((8, 8)), 50)

    def test_tight_layout_regression(self):
        # the tight 4-center layout has its equilibrium at (3,3), which lies
        # exactly on the outer boundary of the annulus about (2,2)
        # (squared distance 2), so the inclusive scan reaches exactly zero
        val = equilibrium_scan(_reduced_field2d("planar", FIG_B), Annulus((2.0, 2.0)), 120)
        assert val == 0.0


class TestDetectCycle:
    def test_synthetic_circle_period(self):
        rep = detect_cycle(synthetic_circle(period=7.0))
        assert rep is not None
        assert rep.period == pytest.approx(7.0, abs=1e-6)
        radii = np.hypot(rep.loop_xy[:, 0], rep.loop_xy[:, 1])
        assert np.all(np.abs(radii - 1.0) < 1e-9)

    def test_loop_closes(self):
        rep = detect_cycle(synthetic_circle())
        assert np.linalg.norm(rep.loop[0] - rep.loop[-1]) <= 1e-4

    def test_planar_unit_cycle(self):
        c = default_centers(1)
        tr = integrate(CenterField(Family.PLANAR, c), [8.1, 8.0], IntegratorSettings(t_end=100.0))
        rep = detect_cycle(tr, transient_fraction=0.5)
        assert rep.period == pytest.approx(EXPECTED_PERIOD, abs=1e-3)

    def test_spiral_to_focus_yields_no_cycle(self):
        # tight layout, seed just off the stable focus at (3,3)
        tr = integrate(CenterField(Family.PLANAR, FIG_B), [3.05, 3.05],
                       IntegratorSettings(t_end=100.0))
        try:
            rep = detect_cycle(tr)
        except TooShort:
            rep = None
        assert rep is None
        assert np.linalg.norm(tr.final_state - [3.0, 3.0]) < 1e-6

    def test_too_short(self):
        with pytest.raises(TooShort):
            detect_cycle(synthetic_circle(period=80.0, t_end=100.0))

    def test_period_seed_invariance(self):
        c = default_centers(1)
        field = CenterField(Family.PLANAR, c)
        periods = []
        for theta in np.linspace(0, 2 * np.pi, 8, endpoint=False):
            seed = [8.0 + 1.3 * math.cos(theta), 8.0 + 1.3 * math.sin(theta)]
            rep = detect_cycle(integrate(field, seed, IntegratorSettings(t_end=100.0)))
            periods.append(rep.period)
        assert max(periods) - min(periods) < 2e-3


class TestDistToCycle:
    def test_point_on_loop(self):
        rep = detect_cycle(synthetic_circle())
        assert dist_to_cycle(rep.loop_xy[10], rep) < 1e-9

    def test_circle_center(self):
        # chord sagitta of the sampled polyline is ~(angular step)^2 / 8, so
        # the synthetic loop needs fine sampling for a 1e-6 geometry check
        rep = detect_cycle(synthetic_circle(stride=0.001))
        assert dist_to_cycle([0.0, 0.0], rep) == pytest.approx(1.0, abs=1e-6)

    def test_offset_from_planar_cycle(self):
        c = default_centers(1)
        tr = integrate(CenterField(Family.PLANAR, c), [8.1, 8.0], IntegratorSettings(t_end=100.0))
        rep = detect_cycle(tr)
        assert dist_to_cycle([10.0, 8.0], rep) == pytest.approx(1.0, abs=1e-3)

    def test_dimension_mismatch(self):
        rep = detect_cycle(synthetic_circle())
        with pytest.raises(ValueError):
            dist_to_cycle([1.0, 2.0, 3.0], rep)


class TestClustering:
    def test_same_cycle_clusters(self):
        a = detect_cycle(synthetic_circle())
        b = detect_cycle(synthetic_circle(period=7.1))
        count, reps = cluster_cycles([a, b], cluster_tol=0.3)
        assert count == 1
        assert reps[0].basin_count == 2

    def test_distinct_cycles_stay_apart(self):
        a = detect_cycle(synthetic_circle())
        shifted = synthetic_circle()
        shifted = Trajectory(shifted.times, shifted.states + 5.0, shifted.meta)
        b = detect_cycle(shifted)
        count, reps = cluster_cycles([a, b], cluster_tol=0.3)
        assert count == 2
        assert loop_hausdorff(a, b) == pytest.approx(5 * math.sqrt(2), rel=1e-3)

    def test_count_cycles_order_invariant(self):
        c = CenterSet.from_pairs([(2, 2), (2, 6), (6, 2), (6, 6)])
        field = CenterField(Family.PLANAR, c)
        seeds = [[a + 1.0, b] for a, b in c.pairs()] + [[0.0, 0.0], [8.0, 4.0]]
        s = IntegratorSettings(t_end=100.0)
        n1, reps1 = count_cycles(field, seeds, s)
        n2, reps2 = count_cycles(field, list(reversed(seeds)), s)
        assert n1 == n2 == 4
        p1 = sorted(r.period for r in reps1)
        p2 = sorted(r.period for r in reps2)
        assert np.allclose(p1, p2, rtol=1e-6)


class TestCertify:
    def test_planar_single_center(self):
        rep = certify("planar", 1)
        assert rep.verdict
        assert len(rep.cycles) == 1
        assert rep.cycles[0].period == pytest.approx(EXPECTED_PERIOD, abs=1e-3)
        assert rep.cycles[0].containing_annulus == 0
        assert all(a.passed for a in rep.annuli)

    def test_xfactored_planar(self):
        rep = certify("xfactored-planar", 1)
        assert rep.verdict
        assert len(rep.cycles) == 1

    def test_report_json_schema(self):
        rep = certify("planar", 1)
        d = rep.to_json_dict()
        assert set(d) >= {"kind", "K", "params", "annuli", "cycles", "verdict"}
        assert set(d["annuli"][0]) == {"index", "outer_flux", "inner_flux", "min_field_mag", "pass"}
        assert set(d["cycles"][0]) == {"period", "annulus", "basin_count"}

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            certify("made-up", 1)

    def test_tight_centers_fail(self):
        # the squeezed layout keeps one large cycle and a stable focus: the
        # annulus checks fail and no annulus holds its own cycle
        rep = certify("factored", 4, centers=FIG_B, settings=IntegratorSettings(t_end=100.0))
        assert not rep.verdict
        assert any(not a.passed for a in rep.annuli)

    def test_two_species_consistency(self):
        # same orbits as the x-factored planar field (time reparametrization)
        rep2 = certify("two-species", 1)
        assert rep2.verdict
        repx = certify("xfactored-planar", 1)
        assert loop_hausdorff(rep2.cycles[0], repx.cycles[0]) < 0.3
