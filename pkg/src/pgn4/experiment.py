"""The experiment protocol: split, rank, arrange, train all methods, tabulate.

A sweep reproduces the comparison-grid protocol end to end: load (or
synthesize) a dataset, hold out a random validation fraction, compute the
correlation report on the training split only (no leakage; a flag exists
for whole-table ranking), then for each requested feature count select
and arrange, standardize, train every method, and evaluate on the
validation split.  Feature counts larger than the dataset are skipped
with a notice, which is how the sparser dataset's empty grid rows arise.

Reproducibility contract: one 64-bit seed determines every artifact byte.
Stream discipline: from ``root = Rng(seed)``, repeat ``r`` uses
``root.child(r)``; within a repeat, the split uses ``child(0)`` and the
grid cell at (count index ci, method index mi) uses
``child(1 + ci * n_methods + mi)``.  Cells are therefore independent jobs
and could run in any order or in parallel; this implementation runs them
sequentially and writes artifacts in canonical order either way.
Timestamps are deliberately kept out of artifact files.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, asdict, replace
from pathlib import Path

import numpy as np

from .baselines import (
    save_classifier,
    train_adaboost,
    train_decision_tree,
    train_linear_svm,
    train_mlp,
    train_random_forest,
)
from .data import DatasetTable, csv_header, load_csv, split_train_valid, standardize
from .features import correlation_report, project, select_and_arrange
from .metrics import EvalReport, evaluate
from .model import build_pgn4
from .rng import Rng
from .synth import PRESETS, REASON_COLUMN, generate
from .training import TrainConfig, train

METHODS = ("pgn4", "svm", "dt", "rf", "ada", "nn")
METRIC_NAMES = ("accuracy", "f1", "roc_auc", "pr_auc")


@dataclass
class ExperimentConfig:
    """Everything a sweep needs; hashable to a provenance id."""

    data_csv: str | None = None
    preset: str | None = None
    label_column: str = "flag"
    exclude_columns: tuple[str, ...] = ()
    feature_counts: tuple = (5, 10, 20, 50, "full")
    methods: tuple[str, ...] = METHODS
    valid_fraction: float = 0.25
    seed: int = 0
    repeats: int = 1
    standardize_features: bool = True
    signed_ranking: bool = False
    select_on_full_table: bool = False
    # shared training loop (pgn4 and nn)
    learning_rate: float = 2e-4
    epochs: int = 20
    batch_size: int = 32
    # pgn4
    activation: str = "relu"
    dropout_rate: float = 0.0
    # baselines
    tree_depth: int = 6
    min_leaf: int = 1
    n_trees: int = 100
    ada_rounds: int = 100
    svm_lambda: float = 1e-3
    svm_epochs: int = 20
    mlp_hidden: int = 128

    def __post_init__(self):
        self.exclude_columns = tuple(self.exclude_columns)
        self.methods = tuple(self.methods)
        self.feature_counts = tuple(self.feature_counts)
        if (self.data_csv is None) == (self.preset is None):
            raise ValueError("exactly one of data_csv or preset must be set")
        if self.preset is not None and self.preset not in PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}; choose from {sorted(PRESETS)}")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods {sorted(unknown)}; choose from {METHODS}")
        if not self.methods:
            raise ValueError("at least one method required")
        for c in self.feature_counts:
            if c != "full" and (not isinstance(c, int) or c < 1):
                raise ValueError(f"feature counts must be positive integers or 'full', got {c!r}")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")

    def config_hash(self) -> str:
        """Stable 16-hex-digit id of the experiment definition."""
        payload = json.dumps(asdict(self), sort_keys=True, default=str)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def load_config_file(path: str | Path) -> dict:
    """Read a JSON config file into kwargs for ExperimentConfig."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return raw


@dataclass
class CellResult:
    feature_count: str  # display key: "5", "10", ..., "full"
    n_features: int
    method: str
    status: str  # "ok" | "failed"
    metrics: dict[str, float] | None = None
    metric_stds: dict[str, float] | None = None
    error: str | None = None


@dataclass
class SweepResult:
    config: ExperimentConfig
    config_hash: str
    cells: list[CellResult]
    arrangements: dict[str, list[str]]  # display key -> ordered feature names
    skipped: list[str]  # display keys skipped because count > available
    class_counts: tuple[int, int]
    top_correlations: list[tuple[str, float]]

    @property
    def all_ok(self) -> bool:
        return all(c.status == "ok" for c in self.cells)


def _display_key(count) -> str:
    return "full" if count == "full" else str(count)


def _train_one(method: str, cfg: ExperimentConfig, tr: DatasetTable, va: DatasetTable,
               cell_seed: int):
    if method == "pgn4":
        model = build_pgn4(
            tr.n_features, Rng(cell_seed).child(1),
            activation=cfg.activation, dropout_rate=cfg.dropout_rate,
        )
        train(model, tr, va, TrainConfig(
            learning_rate=cfg.learning_rate, epochs=cfg.epochs,
            batch_size=cfg.batch_size, seed=cell_seed))
        return model
    if method == "nn":
        model, _ = train_mlp(tr, va, TrainConfig(
            learning_rate=cfg.learning_rate, epochs=cfg.epochs,
            batch_size=cfg.batch_size, seed=cell_seed), hidden=cfg.mlp_hidden)
        return model
    if method == "dt":
        return train_decision_tree(tr, max_depth=cfg.tree_depth, min_leaf=cfg.min_leaf)
    if method == "rf":
        return train_random_forest(
            tr, Rng(cell_seed), n_trees=cfg.n_trees,
            max_depth=cfg.tree_depth, min_leaf=cfg.min_leaf)
    if method == "ada":
        return train_adaboost(tr, n_rounds=cfg.ada_rounds)
    if method == "svm":
        return train_linear_svm(tr, Rng(cell_seed), lam=cfg.svm_lambda, epochs=cfg.svm_epochs)
    raise ValueError(f"unknown method {method!r}")


def _load_table(cfg: ExperimentConfig) -> DatasetTable:
    if cfg.preset is not None:
        return generate(PRESETS[cfg.preset](seed=cfg.seed)).table
    exclude = list(cfg.exclude_columns)
    # the generator's reason-code string column is excluded by default
    if REASON_COLUMN not in exclude and REASON_COLUMN in csv_header(cfg.data_csv):
        exclude.append(REASON_COLUMN)
    return load_csv(cfg.data_csv, cfg.label_column, exclude)


def _run_once(cfg: ExperimentConfig, table: DatasetTable, repeat_rng: Rng,
              log: list[str]):
    """One full protocol pass; returns (cells, arrangements, skipped, reports, models)."""
    tr_raw, va_raw = split_train_valid(table, cfg.valid_fraction, repeat_rng.child(0))
    rank_table = table if cfg.select_on_full_table else tr_raw
    report = correlation_report(rank_table)
    available = int((~report.degenerate).sum())
    cells: list[CellResult] = []
    arrangements: dict[str, list[str]] = {}
    skipped: list[str] = []
    full_reports: dict[tuple[str, str], EvalReport] = {}
    models: dict[tuple[str, str], object] = {}
    for ci, count in enumerate(cfg.feature_counts):
        key = _display_key(count)
        n = available if count == "full" else int(count)
        if n > available:
            skipped.append(key)
            log.append(f"skipping feature count {key}: only {available} usable features")
            continue
        arrangement = select_and_arrange(report, n, signed=cfg.signed_ranking)
        arrangements[key] = list(arrangement.ordered_names)
        tr = project(tr_raw, arrangement)
        va = project(va_raw, arrangement)
        if cfg.standardize_features:
            tr, (va,), _ = standardize(tr, [va])
        for mi, method in enumerate(cfg.methods):
            cell_seed = repeat_rng.child(1 + ci * len(cfg.methods) + mi).seed
            try:
                clf = _train_one(method, cfg, tr, va, cell_seed)
                rep = evaluate(clf.score(va.features), va.labels)
                cells.append(CellResult(
                    feature_count=key, n_features=n, method=method, status="ok",
                    metrics=rep.headline()))
                full_reports[(key, method)] = rep
                models[(key, method)] = clf
            except Exception as exc:  # cell failure must not kill the sweep
                log.append(f"cell ({key}, {method}) failed: {exc}")
                cells.append(CellResult(
                    feature_count=key, n_features=n, method=method, status="failed",
                    error=str(exc)))
    return cells, arrangements, skipped, report, full_reports, models


def run_sweep(cfg: ExperimentConfig, out_dir: str | Path,
              log: list[str] | None = None) -> SweepResult:
    """Run the sweep (possibly repeated) and write all artifacts to out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    log = log if log is not None else []
    root = Rng(cfg.seed)
    table = _load_table(cfg)
    neg, pos = table.class_counts()
    log.append(f"dataset: {table.n_rows} rows x {table.n_features} features "
               f"({pos} flagged / {neg} not)")

    runs = []
    for r in range(cfg.repeats):
        runs.append(_run_once(cfg, table, root.child(r), log))
    cells0, arrangements, skipped, corr_report, full_reports, models = runs[0]

    if cfg.repeats == 1:
        cells = cells0
    else:
        cells = _aggregate_cells([run[0] for run in runs])

    ranked = corr_report.ranked(signed=cfg.signed_ranking)
    result = SweepResult(
        config=cfg,
        config_hash=cfg.config_hash(),
        cells=cells,
        arrangements=arrangements,
        skipped=skipped,
        class_counts=(neg, pos),
        top_correlations=ranked,
    )
    _write_artifacts(result, corr_report, full_reports, models, out)
    return result


def _aggregate_cells(per_run: list[list[CellResult]]) -> list[CellResult]:
    """Mean and std of each metric across repeats; any failure fails the cell."""
    out = []
    for cells in zip(*per_run):
        first = cells[0]
        if any(c.status != "ok" for c in cells):
            errors = "; ".join(c.error for c in cells if c.error)
            out.append(replace(first, status="failed", metrics=None, error=errors))
            continue
        metrics = {}
        stds = {}
        for name in METRIC_NAMES:
            vals = np.array([c.metrics[name] for c in cells])
            metrics[name] = float(vals.mean())
            stds[name] = float(vals.std())
        out.append(replace(first, metrics=metrics, metric_stds=stds))
    return out


# ---------------------------------------------------------------------------
# artifacts
# ---------------------------------------------------------------------------


def _provenance_lines(result: SweepResult) -> list[str]:
    return [f"config_hash={result.config_hash}", f"seed={result.config.seed}"]


def _write_artifacts(result, corr_report, full_reports, models, out: Path) -> None:
    prov = _provenance_lines(result)
    _write_grid_csv(result, out / "grid.csv", prov)
    _write_grid_json(result, out / "grid.json")
    _write_correlations_csv(result, out / "correlations.csv", prov)
    for key, names in result.arrangements.items():
        _write_features_csv(result, corr_report, key, names, out / f"features_{key}.csv", prov)
    curves = out / "curves"
    curves.mkdir(exist_ok=True)
    for (key, method), rep in sorted(full_reports.items()):
        _write_points(rep.roc_points, ("fpr", "tpr"), curves / f"roc_{key}_{method}.csv", prov)
        _write_points(rep.pr_points, ("recall", "precision"), curves / f"pr_{key}_{method}.csv", prov)
    models_dir = out / "models"
    models_dir.mkdir(exist_ok=True)
    extra = {"provenance": {"config_hash": result.config_hash, "seed": result.config.seed}}
    for (key, method), clf in sorted(models.items()):
        save_classifier(clf, models_dir / f"{key}_{method}.pgn4", extra_meta=extra)


def _write_grid_csv(result: SweepResult, path: Path, prov: list[str]) -> None:
    with_std = result.config.repeats > 1
    with open(path, "w", encoding="utf-8") as fh:
        for line in prov:
            fh.write(f"# {line}\n")
        cols = ["feature_count", "method", "status"]
        for m in METRIC_NAMES:
            cols.append(m)
            if with_std:
                cols.append(f"{m}_std")
        fh.write(",".join(cols) + "\n")
        for c in result.cells:
            row = [c.feature_count, c.method, c.status]
            for m in METRIC_NAMES:
                row.append(repr(c.metrics[m]) if c.metrics else "")
                if with_std:
                    row.append(repr(c.metric_stds[m]) if c.metric_stds else "")
            fh.write(",".join(row) + "\n")


def _write_grid_json(result: SweepResult, path: Path) -> None:
    payload = {
        "config_hash": result.config_hash,
        "seed": result.config.seed,
        "repeats": result.config.repeats,
        "class_counts": list(result.class_counts),
        "skipped_feature_counts": result.skipped,
        "arrangements": result.arrangements,
        "cells": [
            {
                "feature_count": c.feature_count,
                "n_features": c.n_features,
                "method": c.method,
                "status": c.status,
                "metrics": c.metrics,
                "metric_stds": c.metric_stds,
                "error": c.error,
            }
            for c in result.cells
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_correlations_csv(result: SweepResult, path: Path, prov: list[str]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in prov:
            fh.write(f"# {line}\n")
        fh.write("feature,flag_correlation\n")
        for name, corr in result.top_correlations:
            fh.write(f"{name},{corr!r}\n")


def _write_features_csv(result, corr_report, key, names, path: Path, prov) -> None:
    corr = dict(zip(corr_report.feature_names, corr_report.flag_corr))
    ranked = sorted(names, key=lambda n: -abs(corr[n]))
    with open(path, "w", encoding="utf-8") as fh:
        for line in prov:
            fh.write(f"# {line}\n")
        fh.write("feature,flag_correlation\n")
        for name in ranked:
            fh.write(f"{name},{float(corr[name])!r}\n")


def _write_points(points: np.ndarray, headers: tuple[str, str], path: Path, prov) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in prov:
            fh.write(f"# {line}\n")
        fh.write(",".join(headers) + "\n")
        for x, y in points:
            fh.write(f"{float(x)!r},{float(y)!r}\n")


# ---------------------------------------------------------------------------
# report rendering
# ---------------------------------------------------------------------------


def render_report(out_dir: str | Path, top_k: int = 5) -> str:
    """Text table of the grid (best cell per metric within each feature
    count starred, failures dashed) plus the strongest flag correlations."""
    out = Path(out_dir)
    grid_path = out / "grid.json"
    if not grid_path.exists():
        raise FileNotFoundError(f"no sweep results at {out} (missing grid.json)")
    with open(grid_path, encoding="utf-8") as fh:
        grid = json.load(fh)
    cells = grid["cells"]
    with_std = grid.get("repeats", 1) > 1

    def fmt(c, m):
        if c["status"] != "ok":
            return "-"
        s = f"{c['metrics'][m]:.4f}"
        if with_std and c.get("metric_stds"):
            s += f"±{c['metric_stds'][m]:.4f}"
        return s

    lines = []
    lines.append(f"sweep {grid['config_hash']} (seed {grid['seed']})")
    neg, pos = grid["class_counts"]
    lines.append(f"classes: {pos} flagged / {neg} not flagged")
    if grid["skipped_feature_counts"]:
        lines.append("skipped feature counts: " + ", ".join(grid["skipped_feature_counts"]))
    lines.append("")
    header = ["features", "method"] + list(METRIC_NAMES)
    rows = []
    by_count: dict[str, list[dict]] = {}
    for c in cells:
        by_count.setdefault(c["feature_count"], []).append(c)
    for key, group in by_count.items():
        best = {}
        for m in METRIC_NAMES:
            vals = [c["metrics"][m] for c in group if c["status"] == "ok"]
            best[m] = max(vals) if vals else None
        for c in group:
            row = [key, c["method"]]
            for m in METRIC_NAMES:
                text = fmt(c, m)
                if c["status"] == "ok" and best[m] is not None and c["metrics"][m] == best[m]:
                    text += "*"
                row.append(text)
            rows.append(row)
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    lines.append("  ".join(h.ljust(w) for h, w in zip(header, widths)))
    for r in rows:
        lines.append("  ".join(v.ljust(w) for v, w in zip(r, widths)))
    lines.append("")
    lines.append(f"top {top_k} features by |flag correlation|:")
    corr_path = out / "correlations.csv"
    with open(corr_path, encoding="utf-8") as fh:
        data_lines = [l.strip() for l in fh if l.strip() and not l.startswith("#")]
    for line in data_lines[1 : top_k + 1]:
        name, corr = line.split(",")
        lines.append(f"  {name}  {float(corr):+.4f}")
    return "\n".join(lines)
