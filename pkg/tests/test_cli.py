import json
import math
from pathlib import Path

import numpy as np
import pytest

from crncycles.cli import main
from crncycles.formats import crn_from_text, crn_to_text, crn_from_json_dict
from crncycles.systems import seventh_order_crn


def run_cli(args, capsys):
    """Invoke the entry point in-process; return (exit_code, stdout)."""
    code = 0
    try:
        main(list(args))
    except SystemExit as exc:
        code = exc.code if exc.code is not None else 0
    out = capsys.readouterr()
    return code, out.out + out.err


class TestSynthesize:
    def test_seventh_order_counts_and_files(self, tmp_path, capsys):
        code, out = run_cli(
            ["synthesize", "--theorem", "1", "--K", "4", "--eps", "1",
             "--output-dir", str(tmp_path)], capsys)
        assert code == 0
        assert "species=6 reactions=116 max_order=7" in out
        text_path = tmp_path / "seventh_order_K4.crn"
        json_path = tmp_path / "seventh_order_K4.json"
        assert text_path.exists() and json_path.exists()
        # parse(print) identity on both formats
        want = seventh_order_crn(4, 1.0)
        assert crn_from_text(text_path.read_text()) == want
        assert crn_from_json_dict(json.loads(json_path.read_text())) == want

    def test_bimolecular_counts(self, tmp_path, capsys):
        code, out = run_cli(
            ["synthesize", "--theorem", "2", "--K", "1", "--eps", "1",
             "--delta", "0.01", "--output-dir", str(tmp_path)], capsys)
        assert code == 0
        assert "species=21 reactions=66 max_order=2" in out

    def test_two_species_degree(self, tmp_path, capsys):
        code, out = run_cli(
            ["synthesize", "--theorem", "3", "--K", "2", "--output-dir", str(tmp_path)],
            capsys)
        assert code == 0
        assert "degree=10" in out
        assert (tmp_path / "two_species_K2.json").exists()

    def test_invalid_parameters_exit_1(self, tmp_path, capsys):
        code, _ = run_cli(
            ["synthesize", "--theorem", "1", "--K", "0", "--output-dir", str(tmp_path)],
            capsys)
        assert code == 1
        code, _ = run_cli(
            ["synthesize", "--theorem", "1", "--K", "2", "--eps", "-1",
             "--output-dir", str(tmp_path)], capsys)
        assert code == 1

    def test_env_var_overrides_output_dir(self, tmp_path, capsys, monkeypatch):
        env_dir = tmp_path / "env-dir"
        monkeypatch.setenv("LCF_OUTPUT_DIR", str(env_dir))
        code, _ = run_cli(
            ["synthesize", "--theorem", "1", "--K", "1",
             "--output-dir", str(tmp_path / "flag-dir")], capsys)
        assert code == 0
        assert (env_dir / "seventh_order_K1.crn").exists()
        assert not (tmp_path / "flag-dir").exists()


class TestSimulate:
    def test_zero_horizon_single_row(self, tmp_path, capsys):
        seeds = tmp_path / "seeds.csv"
        seeds.write_text("8.5,8.0\n")
        code, out = run_cli(
            ["simulate", "--kind", "planar", "--K", "1", "--seeds", str(seeds),
             "--t-end", "0", "--output-dir", str(tmp_path)], capsys)
        assert code == 0
        csv = (tmp_path / "trajectory_000.csv").read_text().splitlines()
        assert len(csv) == 2  # header + one row
        index = json.loads((tmp_path / "index.json").read_text())
        assert index["entries"][0]["status"] == "completed"

    def test_blowup_seeds_marked_diverged(self, tmp_path, capsys):
        seeds = tmp_path / "seeds.csv"
        seeds.write_text("9.2,8.0\n7.0,8.0\n")
        code, out = run_cli(
            ["simulate", "--kind", "reciprocal", "--K", "1", "--seeds", str(seeds),
             "--v-init", "scaled", "--c", "2.0", "--t-end", "100",
             "--output-dir", str(tmp_path)], capsys)
        assert code == 0
        index = json.loads((tmp_path / "index.json").read_text())
        statuses = [e["status"] for e in index["entries"]]
        assert "diverged" in statuses

    def test_full_state_seed_rows(self, tmp_path, capsys):
        seeds = tmp_path / "seeds.csv"
        seeds.write_text("8.5,8.0,0.5\n")
        code, _ = run_cli(
            ["simulate", "--kind", "fast-slow", "--K", "1", "--seeds", str(seeds),
             "--t-end", "1", "--output-dir", str(tmp_path)], capsys)
        assert code == 0
        index = json.loads((tmp_path / "index.json").read_text())
        assert index["entries"][0]["seed"] == [8.5, 8.0, 0.5]

    def test_bad_seed_width_exit_1(self, tmp_path, capsys):
        seeds = tmp_path / "seeds.csv"
        seeds.write_text("1,2,3,4\n")
        code, _ = run_cli(
            ["simulate", "--kind", "planar", "--K", "1", "--seeds", str(seeds),
             "--output-dir", str(tmp_path)], capsys)
        assert code == 1


class TestVerify:
    def test_planar_single_center_passes(self, tmp_path, capsys):
        code, out = run_cli(
            ["verify", "--kind", "planar", "--K", "1", "--output-dir", str(tmp_path)],
            capsys)
        assert code == 0
        report = json.loads((tmp_path / "certification.json").read_text())
        assert report["verdict"] is True
        assert report["cycles"][0]["period"] == pytest.approx(13 * math.pi / 4, abs=1e-3)
        assert "verdict=pass" in out

    def test_squeezed_centers_fail_exit_2(self, tmp_path, capsys):
        code, out = run_cli(
            ["verify", "--kind", "factored", "--K", "4",
             "--centers", "2,2,2,4,4,2,4,4", "--output-dir", str(tmp_path)], capsys)
        assert code == 2
        report = json.loads((tmp_path / "certification.json").read_text())
        assert report["verdict"] is False

    def test_usage_error_exit_1(self, tmp_path, capsys):
        code, _ = run_cli(
            ["verify", "--kind", "planar", "--K", "2", "--centers", "1,2,3",
             "--output-dir", str(tmp_path)], capsys)
        assert code == 1
        code, _ = run_cli(["verify", "--kind", "nope", "--K", "1"], capsys)
        assert code == 1


class TestReplicateFigure:
    def test_unknown_figure_exit_1(self, capsys):
        code, _ = run_cli(["replicate-figure", "5x"], capsys)
        assert code == 1

    def test_bundle_contents(self, tmp_path, capsys):
        code, out = run_cli(
            ["replicate-figure", "1b", "--output-dir", str(tmp_path)], capsys)
        assert code == 0
        bundle = tmp_path / "figure-1b"
        summary = json.loads((bundle / "summary.json").read_text())
        assert summary["cycle_count"] == 1
        assert any(np.hypot(p[0] - 3, p[1] - 3) < 1e-2 for p in summary["fixed_points"])
        cycles = json.loads((bundle / "cycles.json").read_text())
        assert len(cycles) == 1
        assert (bundle / "trajectory_000.csv").exists()
        assert "cycle_count=1" in out
