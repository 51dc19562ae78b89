"""Command line interface: synth, report-correlations, sweep, train, evaluate, report.

Typical session:

    pgn4 synth --preset a-like --seed 7 --out data.csv
    pgn4 sweep --data data.csv --label flag --features 5,10,20,50,full \\
         --methods pgn4,svm,dt,rf,ada,nn --seed 7 --out results/
    pgn4 report results/

``sweep`` also accepts a JSON config file (--config); explicit flags
override the file.  Exit code 0 means every requested grid cell
succeeded (skipped counts, e.g. 50 features on a 27-feature dataset, are
notices, not failures).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import container
from .baselines import load_classifier, save_classifier
from .data import (
    DatasetTable,
    StandardizeStats,
    apply_standardize,
    csv_header,
    load_csv,
    save_csv,
    split_train_valid,
    standardize,
)
from .experiment import (
    METHODS,
    ExperimentConfig,
    load_config_file,
    render_report,
    run_sweep,
    _train_one,
)
from .features import FeatureArrangement, correlation_report, project, select_and_arrange
from .metrics import evaluate
from .rng import Rng
from .synth import PRESETS, REASON_COLUMN, SynthSpec, generate
from .training import TrainConfig


def _parse_counts(text: str) -> tuple:
    out = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        out.append("full" if token == "full" else int(token))
    if not out:
        raise argparse.ArgumentTypeError("empty feature count list")
    return tuple(out)


def _parse_methods(text: str) -> tuple:
    methods = tuple(t.strip() for t in text.split(",") if t.strip())
    unknown = set(methods) - set(METHODS)
    if unknown:
        raise argparse.ArgumentTypeError(f"unknown methods: {sorted(unknown)}")
    return methods


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", help="dataset CSV path")
    p.add_argument("--preset", choices=sorted(PRESETS), help="synthetic preset instead of a CSV")
    p.add_argument("--label", default=None, help="label column name (default: flag)")
    p.add_argument("--exclude", action="append", default=[], metavar="NAME",
                   help="drop this column (repeatable)")


def _add_train_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=2e-4)


def cmd_synth(args) -> int:
    if (args.preset is None) == (args.spec is None):
        print("synth: provide exactly one of --preset or --spec", file=sys.stderr)
        return 2
    if args.preset:
        spec = PRESETS[args.preset](seed=args.seed, emit_reason_codes=args.reasons)
    else:
        with open(args.spec, encoding="utf-8") as fh:
            spec = SynthSpec(**json.load(fh))
    result = generate(spec)
    extras = {}
    if result.reason_codes is not None:
        extras[REASON_COLUMN] = result.reason_codes
    save_csv(
        result.table,
        args.out,
        label_column=args.label,
        extra_columns=extras or None,
        provenance=[f"seed={spec.seed}", f"generator=synth:{args.preset or args.spec}"],
    )
    t = result.table
    print(f"wrote {args.out}: {t.n_rows} rows x {t.n_features} features "
          f"(+ label{' + ' + REASON_COLUMN if extras else ''})")
    neg, pos = t.class_counts()
    print(f"classes: {pos} flagged / {neg} not; planted signals: "
          f"{', '.join(result.signal_features)}")
    return 0


def _load_table(args) -> DatasetTable:
    if (args.data is None) == (args.preset is None):
        raise SystemExit("provide exactly one of --data or --preset")
    if args.preset:
        return generate(PRESETS[args.preset](seed=args.seed)).table
    exclude = list(args.exclude)
    if REASON_COLUMN not in exclude and REASON_COLUMN in csv_header(args.data):
        exclude.append(REASON_COLUMN)
    return load_csv(args.data, args.label or "flag", exclude)


def cmd_report_correlations(args) -> int:
    table = _load_table(args)
    report = correlation_report(table)
    lines = ["feature,flag_correlation"]
    for name, corr in report.ranked(signed=args.signed):
        lines.append(f"{name},{corr!r}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out} ({len(lines) - 1} features)")
    else:
        sys.stdout.write(text)
    return 0


def cmd_sweep(args) -> int:
    kwargs = load_config_file(args.config) if args.config else {}
    overrides = {
        "data_csv": args.data,
        "preset": args.preset,
        "label_column": args.label,
        "feature_counts": args.features,
        "methods": args.methods,
        "seed": args.seed,
        "epochs": args.epochs,
        "batch_size": args.batch_size,
        "learning_rate": args.lr,
        "repeats": args.repeats,
    }
    for key, value in overrides.items():
        if value is not None:
            kwargs[key] = value
    if args.exclude:
        kwargs["exclude_columns"] = tuple(args.exclude)
    if args.no_standardize:
        kwargs["standardize_features"] = False
    if args.signed:
        kwargs["signed_ranking"] = True
    if args.select_on_full:
        kwargs["select_on_full_table"] = True
    kwargs.setdefault("label_column", "flag")
    cfg = ExperimentConfig(**kwargs)
    log: list[str] = []
    result = run_sweep(cfg, args.out, log=log)
    for line in log:
        print(line)
    ok = sum(1 for c in result.cells if c.status == "ok")
    print(f"sweep {result.config_hash}: {ok}/{len(result.cells)} cells ok, "
          f"artifacts in {args.out}")
    if not result.all_ok:
        for c in result.cells:
            if c.status != "ok":
                print(f"  FAILED ({c.feature_count}, {c.method}): {c.error}", file=sys.stderr)
        return 1
    return 0


def cmd_train(args) -> int:
    label = args.label or "flag"
    table = _load_table(args)
    rng = Rng(args.seed)
    train_t, valid_t = split_train_valid(table, args.valid_fraction, rng.child(0))
    report = correlation_report(train_t)
    available = int((~report.degenerate).sum())
    n = available if args.features == "full" else int(args.features)
    if n > available:
        print(f"train: only {available} usable features, requested {n}", file=sys.stderr)
        return 2
    arrangement = select_and_arrange(report, n)
    tr = project(train_t, arrangement)
    va = project(valid_t, arrangement)
    stats = None
    if not args.no_standardize:
        tr, (va,), stats = standardize(tr, [va])
    cfg = ExperimentConfig(
        data_csv=args.data, preset=args.preset, label_column=label,
        methods=(args.method,), seed=args.seed, epochs=args.epochs,
        batch_size=args.batch_size, learning_rate=args.lr,
    )
    clf = _train_one(args.method, cfg, tr, va, rng.child(1).seed)
    rep = evaluate(clf.score(va.features), va.labels)
    pipeline = {
        "pipeline": {
            "feature_names": list(arrangement.ordered_names),
            "label_column": label,
            "standardize_mean": [float(v) for v in stats.mean] if stats else None,
            "standardize_std": [float(v) for v in stats.std] if stats else None,
        },
        "provenance": {"seed": args.seed, "config_hash": cfg.config_hash()},
    }
    save_classifier(clf, args.out, extra_meta=pipeline)
    print(f"trained {args.method} on {tr.n_rows} rows ({n} features), saved to {args.out}")
    print("validation: " + "  ".join(f"{k}={v:.4f}" for k, v in rep.headline().items()))
    return 0


def cmd_evaluate(args) -> int:
    method, meta, _ = container.load_container(args.model)
    clf = load_classifier(args.model)
    pipeline = meta.get("pipeline")
    exclude = list(args.exclude)
    if REASON_COLUMN not in exclude and REASON_COLUMN in csv_header(args.data):
        exclude.append(REASON_COLUMN)
    table = load_csv(args.data, args.label or "flag", exclude)
    if pipeline:
        arrangement = FeatureArrangement(
            ordered_names=pipeline["feature_names"],
            candidate_pool=pipeline["feature_names"],
        )
        table = project(table, arrangement)
        if pipeline.get("standardize_mean") is not None:
            stats = StandardizeStats(
                mean=np.array(pipeline["standardize_mean"]),
                std=np.array(pipeline["standardize_std"]),
            )
            table = apply_standardize(table, stats)
    rep = evaluate(clf.score(table.features), table.labels)
    print(f"{method} on {args.data}: {table.n_rows} rows")
    print("  ".join(f"{k}={v:.4f}" for k, v in rep.headline().items()))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _dump_points(rep.roc_points, ("fpr", "tpr"), out / "roc.csv")
        _dump_points(rep.pr_points, ("recall", "precision"), out / "pr.csv")
        print(f"curves written to {out}")
    return 0


def _dump_points(points, headers, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(headers) + "\n")
        for x, y in points:
            fh.write(f"{float(x)!r},{float(y)!r}\n")


def cmd_report(args) -> int:
    print(render_report(args.results))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pgn4", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset CSV")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--spec", help="JSON file with SynthSpec fields")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reasons", action="store_true", help="emit flag reason codes")
    p.add_argument("--label", default="flag")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("report-correlations", help="rank features by flag correlation")
    _add_data_args(p)
    p.add_argument("--seed", type=int, default=0, help="seed (presets only)")
    p.add_argument("--signed", action="store_true", help="rank by signed value, not magnitude")
    p.add_argument("--out", help="write CSV here instead of stdout")
    p.set_defaults(func=cmd_report_correlations)

    p = sub.add_parser("sweep", help="run the full method x feature-count grid")
    p.add_argument("--config", help="JSON config file (flags override it)")
    _add_data_args(p)
    p.add_argument("--features", type=_parse_counts, default=None,
                   metavar="5,10,20,50,full")
    p.add_argument("--methods", type=_parse_methods, default=None,
                   metavar=",".join(METHODS))
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--repeats", type=int, default=None,
                   help="average metrics over k derived-seed runs (extension)")
    p.add_argument("--no-standardize", action="store_true")
    p.add_argument("--signed", action="store_true")
    p.add_argument("--select-on-full", action="store_true",
                   help="rank features on the whole table instead of the training split")
    p.add_argument("--out", required=True, help="artifact directory")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("train", help="train one method and save the model")
    _add_data_args(p)
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("--features", default="full", metavar="N|full")
    p.add_argument("--valid-fraction", type=float, default=0.25)
    p.add_argument("--no-standardize", action="store_true")
    _add_train_args(p)
    p.add_argument("--out", required=True, help="model file path (.pgn4)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a saved model on a CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--label", default="flag")
    p.add_argument("--exclude", action="append", default=[])
    p.add_argument("--out", help="directory for curve CSVs")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="render a sweep's results as a text table")
    p.add_argument("results", help="sweep artifact directory")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError, container.ContainerError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
