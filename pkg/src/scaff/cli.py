"""Command-line entry point: ``scaff {train,predict,sweep,synth}``.

Progress goes to standard error; data goes to the files named by ``--out``.
Exit codes: 0 success, 2 configuration error, 3 data error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .criteria import parse_criterion
from .dataset import DataConfig, load_csv, read_csv_columns, write_csv_columns
from .ensemble import ForestConfig, ForestModel, fit
from .errors import ConfigError, DataError
from .experiment import ExperimentConfig, run_sweep, synthetic_table
from .kernels import BACKEND
from .tree import TreeConfig

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3

log = logging.getLogger("scaff")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scaff", description="Fair tree ensembles with the SCAFF criterion.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND} kernels)")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    parser.add_argument("-q", "--quiet", action="store_true", help="only log warnings and errors")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("train", help="fit a forest on a CSV file")
    p.add_argument("--data", required=True, help="training CSV")
    p.add_argument("--config", required=True, help="data config JSON")
    p.add_argument("--criterion", default="scaff:0.5",
                   help="scaff:<theta>, auc, kamiran-sub, kamiran-div or faht (default: %(default)s)")
    p.add_argument("--out", required=True, help="model JSON to write")
    p.add_argument("--n-trees", type=int, default=500)
    p.add_argument("--max-depth", type=int, default=4)
    p.add_argument("--min-samples-leaf", type=int, default=1)
    p.add_argument("--features-per-split", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-jobs", type=int, default=1)

    p = sub.add_parser("predict", help="score a CSV file with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="CSV with one 'score' column")

    p = sub.add_parser("sweep", help="cross-validated theta sweep and threshold analysis")
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("synth", help="write a synthetic planted-bias dataset")
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--bias", type=float, default=0.8)
    p.add_argument("--signal", type=float, default=0.8)
    p.add_argument("--groups", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="CSV to write")
    p.add_argument("--config-out", help="also write the matching data config JSON here")
    return parser


def cmd_train(args) -> int:
    config = DataConfig.from_json(args.config)
    dataset = load_csv(args.data, config)
    tree = TreeConfig(
        max_depth=args.max_depth,
        criterion=parse_criterion(args.criterion),
        min_samples_leaf=args.min_samples_leaf,
        features_per_split=args.features_per_split,
    )
    forest = ForestConfig(n_trees=args.n_trees, tree=tree, seed=args.seed, n_jobs=args.n_jobs)
    log.info("training %d trees (%s) on %d rows x %d features [%s kernels]",
             forest.n_trees, tree.criterion, dataset.n, dataset.m, BACKEND)
    model = fit(dataset, forest)
    model.save(args.out)
    log.info("wrote %s", args.out)
    return EXIT_OK


def cmd_predict(args) -> int:
    model = ForestModel.load(args.model)
    scores = model.predict(read_csv_columns(args.data))
    write_csv_columns(args.out, {"score": [repr(float(s)) for s in scores]})
    log.info("scored %d rows -> %s", len(scores), args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = ExperimentConfig.from_json(args.config)
    log.info("sweep: %d cells x %d folds, %d trees each [%s kernels]",
             len(config.cells()), config.k_folds, config.forest.n_trees, BACKEND)
    report = run_sweep(config)
    paths = report.write(args.out)
    log.info("wrote %s", ", ".join(str(p) for p in paths.values()))
    return EXIT_OK


def cmd_synth(args) -> int:
    columns, config = synthetic_table(args.n, args.bias, args.signal, args.groups, args.seed)
    write_csv_columns(args.out, columns)
    if args.config_out:
        Path(args.config_out).write_text(json.dumps(config.to_dict(), indent=2) + "\n", encoding="utf-8")
    log.info("wrote %d rows -> %s", args.n, args.out)
    return EXIT_OK


COMMANDS = {"train": cmd_train, "predict": cmd_predict, "sweep": cmd_sweep, "synth": cmd_synth}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s", force=True)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except DataError as exc:
        log.error("data error: %s", exc)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
