"""Sweep protocol, artifacts, determinism, and the CLI surface."""

import json
from pathlib import Path

import numpy as np
import pytest

from pgn4 import Rng, SynthSpec, generate, load_csv, save_csv, correlation_report, split_train_valid
from pgn4.cli import main
from pgn4.experiment import ExperimentConfig, render_report, run_sweep

pytestmark = pytest.mark.filterwarnings("ignore::RuntimeWarning")


def small_csv(tmp_path, n_rows=150, n_features=7, seed=42, name="data.csv"):
    spec = SynthSpec(
        n_rows=n_rows, n_features=n_features, n_signal=3,
        signal_strengths=(0.45, 0.38, 0.3), seed=seed)
    res = generate(spec)
    path = tmp_path / name
    save_csv(res.table, path)
    return path


def fast_cfg(path, **kw):
    base = dict(
        data_csv=str(path), feature_counts=(3, "full"), methods=("dt", "svm"),
        seed=5, epochs=2, n_trees=5, ada_rounds=5, svm_epochs=3)
    base.update(kw)
    return ExperimentConfig(**base)


class TestSweep:
    def test_grid_shape_contract(self, tmp_path):
        cfg = fast_cfg(small_csv(tmp_path), methods=("pgn4",), feature_counts=(4, "full"))
        result = run_sweep(cfg, tmp_path / "out")
        assert len(result.cells) == 2
        for cell in result.cells:
            assert cell.status == "ok"
            assert set(cell.metrics) == {"accuracy", "f1", "roc_auc", "pr_auc"}

    def test_oversized_count_skipped(self, tmp_path):
        log = []
        cfg = fast_cfg(small_csv(tmp_path), feature_counts=(3, 50, "full"))
        result = run_sweep(cfg, tmp_path / "out", log=log)
        assert result.skipped == ["50"]
        assert {c.feature_count for c in result.cells} == {"3", "full"}
        assert any("skipping feature count 50" in line for line in log)

    def test_failed_cell_recorded_run_continues(self, tmp_path):
        # 3 selected features is below the conv model's minimum input length
        cfg = fast_cfg(small_csv(tmp_path), methods=("pgn4", "dt"), feature_counts=(3,))
        result = run_sweep(cfg, tmp_path / "out")
        by_method = {c.method: c for c in result.cells}
        assert by_method["pgn4"].status == "failed"
        assert "input_length" in by_method["pgn4"].error
        assert by_method["dt"].status == "ok"
        assert not result.all_ok

    def test_artifact_files_written(self, tmp_path):
        out = tmp_path / "out"
        cfg = fast_cfg(small_csv(tmp_path))
        run_sweep(cfg, out)
        assert (out / "grid.csv").exists()
        assert (out / "grid.json").exists()
        assert (out / "correlations.csv").exists()
        assert (out / "features_3.csv").exists()
        assert (out / "features_full.csv").exists()
        assert (out / "curves" / "roc_3_dt.csv").exists()
        assert (out / "curves" / "pr_full_svm.csv").exists()
        assert (out / "models" / "3_dt.pgn4").exists()

    def test_byte_identical_across_runs(self, tmp_path):
        path = small_csv(tmp_path)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        run_sweep(fast_cfg(path), out_a)
        run_sweep(fast_cfg(path), out_b)
        files_a = sorted(p.relative_to(out_a) for p in out_a.rglob("*") if p.is_file())
        files_b = sorted(p.relative_to(out_b) for p in out_b.rglob("*") if p.is_file())
        assert files_a == files_b
        for rel in files_a:
            assert (out_a / rel).read_bytes() == (out_b / rel).read_bytes(), rel

    def test_different_seed_different_grid(self, tmp_path):
        path = small_csv(tmp_path)
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        run_sweep(fast_cfg(path, seed=5), out_a)
        run_sweep(fast_cfg(path, seed=6), out_b)
        assert (out_a / "grid.csv").read_bytes() != (out_b / "grid.csv").read_bytes()

    def test_provenance_embedded_everywhere(self, tmp_path):
        out = tmp_path / "out"
        cfg = fast_cfg(small_csv(tmp_path))
        result = run_sweep(cfg, out)
        for rel in ("grid.csv", "correlations.csv", "features_3.csv",
                    "curves/roc_3_dt.csv"):
            text = (out / rel).read_text()
            assert f"config_hash={result.config_hash}" in text
            assert f"seed={cfg.seed}" in text
        grid = json.loads((out / "grid.json").read_text())
        assert grid["config_hash"] == result.config_hash
        assert grid["seed"] == cfg.seed
        from pgn4.container import load_container

        _, meta, _ = load_container(out / "models" / "3_dt.pgn4")
        assert meta["provenance"]["config_hash"] == result.config_hash

    def test_ranking_computed_on_training_split_only(self, tmp_path):
        path = small_csv(tmp_path)
        cfg = fast_cfg(path)
        out = tmp_path / "out"
        run_sweep(cfg, out)
        table = load_csv(path, "flag")
        train, _ = split_train_valid(table, cfg.valid_fraction, Rng(cfg.seed).child(0).child(0))
        expect = correlation_report(train).ranked()
        lines = [l for l in (out / "correlations.csv").read_text().splitlines()
                 if l and not l.startswith("#")][1:]
        got = [(l.split(",")[0], float(l.split(",")[1])) for l in lines]
        assert [n for n, _ in got] == [n for n, _ in expect]
        np.testing.assert_allclose([c for _, c in got], [c for _, c in expect], atol=1e-15)

    def test_repeats_aggregate(self, tmp_path):
        cfg = fast_cfg(small_csv(tmp_path), methods=("dt",), feature_counts=(3,), repeats=3)
        out = tmp_path / "out"
        result = run_sweep(cfg, out)
        cell = result.cells[0]
        assert cell.metric_stds is not None
        header = [l for l in (out / "grid.csv").read_text().splitlines()
                  if not l.startswith("#")][0]
        assert "accuracy_std" in header

    def test_config_validation(self, tmp_path):
        with pytest.raises(ValueError, match="exactly one"):
            ExperimentConfig()
        with pytest.raises(ValueError, match="unknown methods"):
            ExperimentConfig(preset="a-like", methods=("gru",))
        with pytest.raises(ValueError, match="unknown preset"):
            ExperimentConfig(preset="c-like")
        with pytest.raises(ValueError, match="feature counts"):
            ExperimentConfig(preset="a-like", feature_counts=(0,))


class TestReportRendering:
    def test_single_cell_report(self, tmp_path):
        cfg = fast_cfg(small_csv(tmp_path), methods=("dt",), feature_counts=(3,))
        out = tmp_path / "out"
        run_sweep(cfg, out)
        text = render_report(out)
        assert "features" in text and "dt" in text
        assert "*" in text  # sole cell is best-in-column

    def test_failed_cell_rendered_as_dash(self, tmp_path):
        cfg = fast_cfg(small_csv(tmp_path), methods=("pgn4", "dt"), feature_counts=(3,))
        out = tmp_path / "out"
        run_sweep(cfg, out)
        text = render_report(out)
        row = [l for l in text.splitlines() if " pgn4 " in f" {l} "]
        assert row and "-" in row[0]

    def test_top_features_sorted_and_bounded(self, tmp_path):
        cfg = fast_cfg(small_csv(tmp_path))
        out = tmp_path / "out"
        run_sweep(cfg, out)
        features = (out / "features_3.csv").read_text().splitlines()
        rows = [l for l in features if l and not l.startswith("#")][1:]
        assert len(rows) == 3
        corrs = [abs(float(r.split(",")[1])) for r in rows]
        assert corrs == sorted(corrs, reverse=True)

    def test_missing_results_error(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            render_report(tmp_path / "nope")


class TestCli:
    def test_synth_writes_expected_shape(self, tmp_path, capsys):
        out = tmp_path / "synth.csv"
        code = main(["synth", "--preset", "b-like", "--seed", "3", "--out", str(out)])
        assert code == 0
        table = load_csv(out, "flag")
        assert table.n_rows == 4132 and table.n_features == 27
        assert "4132 rows x 27 features" in capsys.readouterr().out

    def test_synth_deterministic_bytes(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        spec = {"n_rows": 50, "n_features": 4, "n_signal": 1,
                "signal_strengths": [0.4], "seed": 9}
        spec_path = tmp_path / "spec.json"
        spec_path.write_text(json.dumps(spec))
        assert main(["synth", "--spec", str(spec_path), "--out", str(a)]) == 0
        assert main(["synth", "--spec", str(spec_path), "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_synth_reason_column(self, tmp_path):
        out = tmp_path / "r.csv"
        spec = {"n_rows": 40, "n_features": 3, "n_signal": 0,
                "signal_strengths": [], "seed": 2, "emit_reason_codes": True}
        spec_path = tmp_path / "spec.json"
        spec_path.write_text(json.dumps(spec))
        main(["synth", "--spec", str(spec_path), "--out", str(out)])
        header = [l for l in out.read_text().splitlines() if not l.startswith("#")][0]
        assert header.endswith("flag,rg_reason")
        # the reason column is a string column; excluding it loads cleanly
        table = load_csv(out, "flag", exclude_columns=["rg_reason"])
        assert table.n_features == 3

    def test_report_correlations_stdout(self, tmp_path, capsys):
        path = small_csv(tmp_path)
        assert main(["report-correlations", "--data", str(path)]) == 0
        out = capsys.readouterr().out
        assert out.startswith("feature,flag_correlation")
        assert len(out.strip().splitlines()) == 8  # header + 7 features

    def test_sweep_cli_and_report(self, tmp_path, capsys):
        path = small_csv(tmp_path)
        out = tmp_path / "results"
        code = main([
            "sweep", "--data", str(path), "--features", "3,full",
            "--methods", "dt,ada", "--seed", "4", "--out", str(out)])
        assert code == 0
        assert (out / "grid.json").exists()
        capsys.readouterr()
        assert main(["report", str(out)]) == 0
        assert "ada" in capsys.readouterr().out

    def test_sweep_exit_code_on_failure(self, tmp_path):
        path = small_csv(tmp_path)
        code = main([
            "sweep", "--data", str(path), "--features", "3",
            "--methods", "pgn4", "--out", str(tmp_path / "r")])
        assert code == 1  # 3 features cannot feed the conv stack

    def test_sweep_config_file_with_flag_override(self, tmp_path):
        path = small_csv(tmp_path)
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({
            "data_csv": str(path), "feature_counts": [3],
            "methods": ["dt"], "seed": 1, "epochs": 2}))
        out = tmp_path / "r"
        assert main(["sweep", "--config", str(cfg_path), "--seed", "2",
                     "--out", str(out)]) == 0
        grid = json.loads((out / "grid.json").read_text())
        assert grid["seed"] == 2  # flag wins over file

    def test_train_then_evaluate(self, tmp_path, capsys):
        path = small_csv(tmp_path, n_rows=120)
        model_path = tmp_path / "model.pgn4"
        code = main([
            "train", "--data", str(path), "--method", "rf",
            "--features", "3", "--seed", "6", "--out", str(model_path)])
        assert code == 0
        assert model_path.exists()
        capsys.readouterr()
        code = main(["evaluate", "--model", str(model_path), "--data", str(path),
                     "--out", str(tmp_path / "curves")])
        assert code == 0
        out = capsys.readouterr().out
        assert "roc_auc=" in out
        assert (tmp_path / "curves" / "roc.csv").exists()

    def test_evaluate_rejects_corrupt_model(self, tmp_path, capsys):
        path = small_csv(tmp_path)
        model_path = tmp_path / "m.pgn4"
        main(["train", "--data", str(path), "--method", "dt", "--out", str(model_path)])
        raw = bytearray(model_path.read_bytes())
        raw[-5] ^= 0x1
        model_path.write_bytes(bytes(raw))
        code = main(["evaluate", "--model", str(model_path), "--data", str(path)])
        assert code == 1
        assert "checksum" in capsys.readouterr().err.lower()
