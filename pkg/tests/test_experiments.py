"""Sweep harness: presets, CSV persistence, plot scripts, run directories."""

import csv
import json

import pytest

from sicnet.errors import DomainError
from sicnet.experiments import (
    PRESETS,
    SweepResult,
    SweepSpec,
    default_spec,
    emit_csv,
    emit_plot_script,
    run_preset,
    write_run_directory,
)


class TestSweepSpec:
    def test_unknown_preset(self):
        with pytest.raises(DomainError):
            SweepSpec(preset="fig9")

    def test_custom_needs_grid(self):
        with pytest.raises(DomainError):
            SweepSpec(preset="custom")

    def test_mc_trial_floor(self):
        with pytest.raises(DomainError):
            SweepSpec(preset="fig2", trials=10)

    def test_defaults_cover_all_presets(self):
        for preset in PRESETS:
            grid = ({"formula": "ps_can", "eta": 1.0, "n": 1, "alpha": 4.0},)
            spec = default_spec(preset, grid=grid)
            assert spec.preset == preset


class TestCustomPreset:
    def test_single_point_single_row(self):
        spec = default_spec(
            "custom",
            grid=({"formula": "ps_can", "eta": 1.0, "n": 1, "alpha": 4.0},),
        )
        result = run_preset(spec)
        assert len(result.rows) == 1
        assert result.rows[0]["analytic_value"] == pytest.approx(0.5600992, rel=1e-6)

    def test_unknown_formula_rejected(self):
        spec = default_spec("custom", grid=({"formula": "nonsense"},))
        with pytest.raises(DomainError):
            run_preset(spec)


class TestCsv:
    def fig2_result(self):
        spec = default_spec("fig2", trials=1000, seed=5)
        return run_preset(spec)

    def test_header_schema(self, tmp_path):
        result = self.fig2_result()
        path = emit_csv(result, tmp_path / "result.csv")
        with open(path, newline="") as fh:
            header = next(csv.reader(fh))
        for col in (
            "n",
            "eta_db",
            "ps_can_pgfl",
            "ps_can_tsd",
            "mc_dist_mean",
            "mc_dist_stderr",
            "mc_fade_mean",
            "mc_fade_stderr",
        ):
            assert col in header

    def test_round_trip_at_printed_precision(self, tmp_path):
        result = self.fig2_result()
        path = emit_csv(result, tmp_path / "result.csv")
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            parsed = list(reader)
        assert len(parsed) == len(result.rows)
        for row, orig in zip(parsed, result.rows):
            for col, value in orig.items():
                if isinstance(value, float):
                    assert format(float(row[col]), ".9g") == format(value, ".9g")

    def test_empty_result_header_only(self, tmp_path):
        empty = SweepResult(preset="fig2", columns=["n", "eta_db"], rows=[])
        path = emit_csv(empty, tmp_path / "empty.csv")
        lines = path.read_text().splitlines()
        assert lines == ["n,eta_db"]

    def test_write_failure_carries_path(self, tmp_path):
        result = self.fig2_result()
        target = tmp_path / "missing" / "result.csv"
        with pytest.raises(OSError, match="missing"):
            emit_csv(result, target)

    def test_rerun_same_seed_identical_data(self):
        a = self.fig2_result()
        b = self.fig2_result()
        keep = [c for c in a.columns if c != "runtime_ms"]
        rows_a = [[row[c] for c in keep] for row in a.rows]
        rows_b = [[row[c] for c in keep] for row in b.rows]
        assert rows_a == rows_b


class TestPlotScript:
    def test_fig3_script_curves(self, tmp_path):
        spec = default_spec("fig3", trials=1000, seed=3)
        result = run_preset(spec)
        path = emit_plot_script(result, tmp_path / "plot.gp")
        text = path.read_text()
        assert "result.csv" in text
        # one curve per cancellation budget plus at least the MC overlay
        assert text.count("with linespoints") >= 6
        assert "bound" in text  # header notes the omitted literature bounds

    def test_custom_script(self, tmp_path):
        spec = default_spec(
            "custom", grid=({"formula": "c_integral", "b": 1.0, "alpha": 4.0},)
        )
        result = run_preset(spec)
        path = emit_plot_script(result, tmp_path / "plot.gp")
        assert "custom sweep" in path.read_text()


class TestRunDirectory:
    def test_layout_and_metadata(self, tmp_path):
        spec = default_spec(
            "custom",
            grid=({"formula": "ps_can_tsd", "eta": 1.0, "n": 2},),
            output_dir=tmp_path,
        )
        result = run_preset(spec)
        run_dir = write_run_directory(result, tmp_path)
        assert run_dir.parent == tmp_path / "custom"
        assert (run_dir / "result.csv").exists()
        assert (run_dir / "plot.gp").exists()
        meta = json.loads((run_dir / "meta.json").read_text())
        for key in ("seed", "trials", "config_hash", "tool_version", "rows"):
            assert key in meta
