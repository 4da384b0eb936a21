import numpy as np
import pytest

from crncycles.figures import FIGURE_IDS, figure_config, run_figure
from crncycles.integration import IntegratorSettings


class TestConfigs:
    def test_every_figure_has_twenty_seeds(self):
        for fid in FIGURE_IDS:
            cfg = figure_config(fid)
            assert len(cfg.seeds_xy) == 20
            assert cfg.inside_seed_count == cfg.centers.K

    def test_unknown_id(self):
        with pytest.raises(ValueError):
            figure_config("9z")

    def test_special_seed_near_focus_in_1b(self):
        assert (3.05, 3.05) in figure_config("1b").seeds_xy

    def test_stalled_layout_ring_clearance(self):
        # every outside seed of the stall demonstration keeps one coordinate
        # at least 4 away from every center, which caps u_i below 1/4097 for
        # the half-scaled init (u stays under 1e-3 forever)
        cfg = figure_config("2a")
        for x, y in cfg.seeds_xy[cfg.inside_seed_count:]:
            for a, b in cfg.centers.pairs():
                assert max(abs(x - a), abs(y - b)) >= 4.0

    def test_positive_seeds_for_x_factored_figures(self):
        for fid in ("3a", "3b"):
            cfg = figure_config(fid)
            assert all(x > 0 and y > 0 for x, y in cfg.seeds_xy)

    def test_lift_rules(self):
        cfg = figure_config("3b")
        seed = cfg.lift((3.0, 2.0))
        assert seed.shape == (11,)
        assert np.all(seed[2:] == 1.0)
        cfg = figure_config("2b")
        seed = cfg.lift((3.0, 2.0))
        assert seed.shape == (6,)
        assert np.all(seed[2:] < 0.5)  # half the manifold values


class TestQuickRuns:
    def test_squeezed_layout_one_cycle_and_focus(self):
        res = run_figure("1b", IntegratorSettings(t_end=100.0))
        assert res.cycle_count == 1
        assert res.fixed_points
        assert all(np.hypot(p[0] - 3, p[1] - 3) < 1e-2 for p in res.fixed_points)
        # the surviving orbit encircles all four centers
        loop = res.cycles[0].loop_xy
        r = np.hypot(loop[:, 0] - 3.0, loop[:, 1] - 3.0)
        assert r.min() > 1.4 and r.max() < 2.4

    def test_separated_layout_four_cycles(self):
        res = run_figure("1a", IntegratorSettings(t_end=100.0))
        assert res.cycle_count == 4
        assert sum(c.basin_count for c in res.cycles) == 20
