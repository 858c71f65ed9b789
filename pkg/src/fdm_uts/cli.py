"""Command line entry point: ``fdm-uts {validate,run,sweep,predict}``.

Exit codes: 0 success, 1 completed with warnings, 2 error.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from dataclasses import replace
from pathlib import Path

from .dataset import DatasetError, parse_csv, validate
from .experiment import (
    BUNDLED_INPUT,
    ExperimentConfig,
    SchemaMismatch,
    format_sweep_summary,
    format_table,
    load_config,
    predict_csv,
    read_input,
    run,
    summarize_sweep,
    sweep,
    write_outputs,
    write_sweep,
)
from ._jsonio import dumps

EXIT_OK, EXIT_WARN, EXIT_ERROR = 0, 1, 2


def parse_range(text: str) -> list[int]:
    """``"0-99"``, ``"1-15:2"`` (inclusive, with step) or ``"1,3,5"``."""
    values = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        step = 1
        if ":" in part:
            part, step_text = part.split(":")
            step = int(step_text)
        if "-" in part:
            lo, hi = part.split("-", 1)
            values.extend(range(int(lo), int(hi) + 1, step))
        else:
            values.append(int(part))
    if not values:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return values


def _add_experiment_options(p: argparse.ArgumentParser):
    p.add_argument("--input", help="specimen CSV (default: bundled experimental table)")
    p.add_argument("--config", help="JSON experiment config; flags override it")
    p.add_argument("--base-uts", type=float, help="base-material UTS in MPa (default 60)")
    p.add_argument("--fraction", type=float, help="labeling fraction of base UTS (default 0.8)")
    p.add_argument("--test-fraction", type=float, help="test split fraction (default 0.25)")
    p.add_argument("--seed", type=int, help="split seed (default 42)")
    p.add_argument("--k", type=int, help="KNN neighbours (default 5)")
    p.add_argument("--out-dir", default="results", help="output directory (default: results)")
    p.add_argument("--format", choices=("json", "table"), default="table", help="stdout format")
    p.add_argument("--keep-outliers", action="store_true", help="keep rows above the UTS ceiling")
    p.add_argument("--raw-features", action="store_true", help="skip z-score standardization")


def build_config(args) -> ExperimentConfig:
    """Defaults, then the config file, then explicit flags."""
    data = load_config(args.config) if args.config else {}
    config = ExperimentConfig.from_dict(data)
    overrides = {
        "input": args.input,
        "base_uts": args.base_uts,
        "fraction": args.fraction,
        "test_fraction": args.test_fraction,
        "seed": args.seed,
        "k": args.k,
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if args.keep_outliers:
        overrides["outlier_policy"] = "keep"
    if args.raw_features:
        overrides["raw_features"] = True
    return replace(config, **overrides)


def cmd_validate(args) -> int:
    policy = "keep" if args.keep_outliers else args.policy
    try:
        records = parse_csv(read_input(args.input or BUNDLED_INPUT))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            report = validate(records, policy, args.ceiling)
    except (OSError, DatasetError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    text = report.to_jsonl()
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    print(
        f"{len(records)} records, {len(report.warnings)} flagged, {len(report.records)} kept (policy={policy})",
        file=sys.stderr,
    )
    return EXIT_WARN if report.warnings else EXIT_OK


def cmd_run(args) -> int:
    try:
        config = build_config(args)
        result = run(config)
        write_outputs(result, args.out_dir)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.format == "json":
        sys.stdout.write(dumps(result.report) + "\n")
    else:
        sys.stdout.write(format_table(result.report))
    return EXIT_OK if result.report["status"] == "complete" else EXIT_WARN


def cmd_sweep(args) -> int:
    try:
        config = build_config(args)
        rows = sweep(config, args.seeds, args.k_range, workers=args.workers)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    summary = summarize_sweep(rows)
    write_sweep(rows, summary, args.out_dir, with_k=bool(args.k_range))
    if args.format == "json":
        sys.stdout.write(dumps(summary) + "\n")
    else:
        sys.stdout.write(format_sweep_summary(summary))
    return EXIT_WARN if any(r[5] for r in rows) else EXIT_OK


def cmd_predict(args) -> int:
    try:
        model_data = json.loads(Path(args.model).read_text(encoding="utf-8"))
        text = predict_csv(model_data, Path(args.input).read_text(encoding="utf-8"))
    except (OSError, SchemaMismatch, DatasetError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fdm-uts", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="flag implausible specimen rows")
    p.add_argument("--input", help="specimen CSV (default: bundled experimental table)")
    p.add_argument("--policy", choices=("keep", "drop", "error"), default="drop")
    p.add_argument("--keep-outliers", action="store_true")
    p.add_argument("--ceiling", type=float, default=100.0, help="UTS plausibility ceiling in MPa")
    p.add_argument("--output", help="write JSON-lines warnings here instead of stdout")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="train and evaluate all four classifiers")
    _add_experiment_options(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="repeat the run over a range of split seeds")
    _add_experiment_options(p)
    p.add_argument("--seeds", type=parse_range, default=list(range(100)), help='e.g. "0-99"')
    p.add_argument("--k-range", type=parse_range, help='KNN k values, e.g. "1-15:2"')
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("predict", help="apply a saved model to a feature CSV")
    p.add_argument("--model", required=True, help="model_<name>.json from a run")
    p.add_argument("--input", required=True, help="CSV with the four process-parameter columns")
    p.add_argument("--output", help="write predictions here instead of stdout")
    p.set_defaults(func=cmd_predict)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
