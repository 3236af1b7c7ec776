"""Command line entry point: ``runcount <subcommand> ...``.

Exit codes: 0 success, 1 usage error (usage text on stderr), 2 data or
validation error (one JSON object on stderr). Progress is logged to
stderr as JSON lines unless ``--quiet`` is given.
"""

import argparse
import json
import logging
import os
import sys

from . import __version__, dataset, estimator, experiment, features, grid, hpo, learners, outliers, report, synth
from .errors import RuncountError
from .fileio import atomic_open, sha256_file

DEFAULT_SEED = 20240917
MANIFEST = "manifest.jsonl"

log = logging.getLogger("runcount")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}\n")


class _JsonFormatter(logging.Formatter):
    def format(self, record):
        entry = {"level": record.levelname.lower(), "logger": record.name, "msg": record.getMessage()}
        entry.update(getattr(record, "fields", {}))
        return json.dumps(entry, sort_keys=True)


def _setup_logging(args):
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(_JsonFormatter())
    root = logging.getLogger("runcount")
    root.handlers[:] = [handler]
    root.propagate = False
    if args.quiet:
        root.setLevel(logging.ERROR)
    else:
        root.setLevel(logging.DEBUG if args.verbose else logging.INFO)


def write_manifest(out_dir, paths, argv, seed, inputs=()):
    """Record (command, version, seed, input and output hashes) per output file."""
    path = os.path.join(out_dir, MANIFEST)
    entries = {}
    if os.path.exists(path):
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    e = json.loads(line)
                    entries[e["file"]] = e
    input_hashes = {os.path.basename(p): sha256_file(p) for p in inputs}
    for p in paths:
        name = os.path.relpath(p, out_dir)
        entries[name] = {
            "file": name,
            "sha256": sha256_file(p),
            "command": ["runcount"] + list(argv),
            "version": __version__,
            "seed": seed,
            "inputs": input_hashes,
        }
    with atomic_open(path) as fh:
        for name in sorted(entries):
            fh.write(json.dumps(entries[name], sort_keys=True) + "\n")


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"master seed (default {DEFAULT_SEED})")
    common.add_argument("--verbose", action="store_true")
    common.add_argument("--quiet", action="store_true", help="suppress progress logging")

    parser = _Parser(prog="runcount", description="Adaptive run-count estimation and learned reliability prediction.")
    parser.add_argument("--version", action="version", version=f"runcount {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    p = sub.add_parser("estimate", parents=[common], help="replay recorded runs through the estimator")
    p.add_argument("--runs", required=True, help="runs.csv")
    p.add_argument("--method", required=True, choices=["1", "2", "3"])
    p.add_argument("--tau", required=True, type=float)
    p.add_argument("--n0", type=_positive_int, default=10)
    p.add_argument("--nmax", type=_positive_int, default=50)
    p.add_argument("--min-filtered", type=_positive_int, default=5)
    p.add_argument("--algorithm")
    p.add_argument("--problem")
    p.add_argument("--instance", type=int)
    p.add_argument("--out", required=True, help="trace CSV path")

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic corpus")
    p.add_argument("--grid", default="paper", help="'paper' or a grid CSV (method_code,tau,algorithm)")
    p.add_argument("--cells", type=_positive_int, help="use only the first N cells of the grid")
    p.add_argument("--per-cell", type=_positive_int, default=240)
    p.add_argument("--separable", default="", help="comma-separated algorithms generated separable by construction")
    p.add_argument("--delta", type=float, default=1.0, help="label tolerance in standard errors")
    p.add_argument("--no-features", action="store_true", help="skip writing features.csv")
    p.add_argument("--out", required=True)

    p = sub.add_parser("features", parents=[common], help="extract features.csv from runs.csv and labels.csv")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", help="features CSV path (default CORPUS/features.csv)")

    p = sub.add_parser("train", parents=[common], help="tune and evaluate one family on one cell")
    p.add_argument("--corpus", required=True)
    p.add_argument("--key", required=True, help="cell key such as 1_0.15_NGOpt14")
    p.add_argument("--family", required=True, choices=["DT", "RF", "GBT", "BASE"])
    p.add_argument("--budget", type=_positive_int, default=50)
    p.add_argument("--folds", type=_positive_int, default=5)
    p.add_argument("--out", required=True)

    p = sub.add_parser("experiment", parents=[common], help="run the within-configuration grid")
    p.add_argument("--corpus", required=True)
    p.add_argument("--grid", default="paper")
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--budget", type=_positive_int, default=50)
    p.add_argument("--folds", type=_positive_int, default=5)
    p.add_argument("--no-figures", action="store_true", help="skip the matplotlib PNGs")
    p.add_argument("--out", required=True)

    p = sub.add_parser("report", parents=[common], help="re-render summary and heatmaps from cells.csv")
    p.add_argument("--cells", required=True)
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--out", required=True)
    return parser


def cmd_estimate(args, argv):
    runs = synth.read_runs(args.runs)
    wanted = [
        k for k in runs
        if (args.algorithm is None or k[0] == args.algorithm)
        and (args.problem is None or k[1] == args.problem)
        and (args.instance is None or k[2] == args.instance)
    ]
    if len(wanted) != 1:
        raise RuncountError(f"selection matches {len(wanted)} streams; narrow it with --algorithm/--problem/--instance")
    config = estimator.EstimatorConfig(
        tau=args.tau, method=outliers.method_from_code(args.method), n0=args.n0, n_max=args.nmax,
        min_filtered=args.min_filtered,
    )
    result = estimator.estimate_runs(runs[wanted[0]], config)
    with atomic_open(args.out) as fh:
        estimator.write_trace(result, fh)
    write_manifest(os.path.dirname(os.path.abspath(args.out)), [args.out], argv, args.seed, [args.runs])
    print(json.dumps({"stream": list(wanted[0]), "estimated_n": result.estimated_n,
                      "stop_reason": result.stop_reason.value, "reached_max": result.reached_max}))


def cmd_synth(args, argv):
    keys = grid.resolve_grid(args.grid)
    if args.cells:
        keys = keys[: args.cells]
    separable = [a for a in args.separable.split(",") if a]
    counts = synth.generate_corpus(
        keys, args.out, per_cell=args.per_cell, base_seed=args.seed, separable=separable,
        rule=synth.SynthLabelRule(args.delta),
    )
    written = [os.path.join(args.out, "runs.csv"), os.path.join(args.out, "labels.csv")]
    if not args.no_features:
        written.append(os.path.join(args.out, "features.csv"))
        features.build_features(written[0], written[1], written[2])
    write_manifest(args.out, written, argv, args.seed)
    for key, (c0, c1) in counts.items():
        log.info("cell labels", extra={"fields": {"cell": key, "label0": c0, "label1": c1}})


def cmd_features(args, argv):
    runs = os.path.join(args.corpus, "runs.csv")
    labels = os.path.join(args.corpus, "labels.csv")
    out = args.out or os.path.join(args.corpus, "features.csv")
    n = features.build_features(runs, labels, out)
    write_manifest(os.path.dirname(os.path.abspath(out)), [out], argv, args.seed, [runs, labels])
    log.info("features written", extra={"fields": {"rows": n, "path": out}})


def cmd_train(args, argv):
    corpus, fpath = experiment.load_corpus(args.corpus, os.path.join(args.out, "features.csv"))
    key = grid.ConfigKey.parse(args.key)
    if key not in corpus:
        raise RuncountError(f"empty configuration: no rows for {key}")
    family = learners.family_from_name(args.family)
    split = dataset.stratified_split(corpus[key], seed=args.seed)
    budget = 1 if family is learners.Family.MAJORITY_BASELINE else args.budget
    trial_log = hpo.search(family, split.train, budget=budget, seed=args.seed, folds=args.folds)
    pred = learners.predict(trial_log.model, dataset.apply_normalizer(trial_log.normalizer, split.test))
    metrics = learners.evaluate(pred, split.test.y)
    os.makedirs(args.out, exist_ok=True)
    paths = {name: os.path.join(args.out, name) for name in ("model.json", "trials.csv", "split.csv", "metrics.csv")}
    with atomic_open(paths["model.json"]) as fh:
        doc = learners.model_to_dict(trial_log.model)
        doc["normalizer"] = {"mean": trial_log.normalizer.mean.tolist(), "std": trial_log.normalizer.std.tolist()}
        fh.write(json.dumps(doc, sort_keys=True) + "\n")
    with atomic_open(paths["trials.csv"]) as fh:
        hpo.write_trial_log(fh, trial_log, cell=str(key))
    with atomic_open(paths["split.csv"]) as fh:
        fh.write("cell,id,partition\n")
        dataset.write_split_manifest(fh, key, split)
    with atomic_open(paths["metrics.csv"]) as fh:
        fh.write("cell,family," + ",".join(learners.METRIC_COLUMNS) + "\n")
        fh.write(f"{key},{family.value}," + ",".join(repr(v) for v in metrics.as_row()) + "\n")
    write_manifest(args.out, list(paths.values()), argv, args.seed, [fpath])
    print(json.dumps({"cell": str(key), "family": family.value, "params": trial_log.best.spec.params,
                      "recall_0": metrics.recall_0, "f1_1": metrics.f1_1, "valid": experiment.is_valid(metrics)}))


def cmd_experiment(args, argv):
    keys = grid.resolve_grid(args.grid)
    corpus, fpath = experiment.load_corpus(args.corpus, os.path.join(args.out, "features.csv"))
    config = experiment.PipelineConfig(budget=args.budget, folds=args.folds)

    def progress(cell):
        fields = {"cell": str(cell.key), "valid": cell.valid}
        if cell.error:
            fields["error"] = cell.error
        log.info("cell done", extra={"fields": fields})

    result = experiment.run_grid(corpus, keys, args.seed, config, workers=args.workers, progress=progress)
    written = report.emit_reports(result, args.out, figures=not args.no_figures)
    splits = os.path.join(args.out, "splits.csv")
    with atomic_open(splits) as fh:
        fh.write("cell,id,partition\n")
        for cell in result.cells:
            for part, ids in zip(("train", "test"), cell.split_ids):
                for ident in ids:
                    fh.write(f"{cell.key},{ident},{part}\n")
    trials = os.path.join(args.out, "trials.csv")
    with atomic_open(trials) as fh:
        fh.write(",".join(hpo.TRIAL_COLUMNS) + "\n")
        for cell in result.cells:
            fh.write(cell.trial_csv)
    write_manifest(args.out, written + [splits, trials], argv, args.seed, [fpath])
    frac = result.valid_fraction
    print(json.dumps({"cells": len(result.cells), "valid": result.valid_count, "evaluable": len(result.evaluable),
                      "valid_fraction": "n/a" if frac is None else round(frac, 4)}))


def cmd_report(args, argv):
    result = report.read_cells_csv(args.cells)
    written = report.emit_reports(result, args.out, figures=not args.no_figures)
    write_manifest(args.out, written, argv, args.seed, [args.cells])


COMMANDS = {
    "estimate": cmd_estimate,
    "synth": cmd_synth,
    "features": cmd_features,
    "train": cmd_train,
    "experiment": cmd_experiment,
    "report": cmd_report,
}


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(str(exc))
        return 1
    _setup_logging(args)
    try:
        COMMANDS[args.command](args, argv)
    except (RuncountError, OSError, ValueError) as exc:
        sys.stderr.write(json.dumps({"error": str(exc), "type": type(exc).__name__}) + "\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
