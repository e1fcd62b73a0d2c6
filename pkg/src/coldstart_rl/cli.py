"""Command-line entry point.

Subcommands:
    synth      generate a synthetic interaction CSV from the config
    train      train one agent (variant x display size x seed)
    evaluate   fill the RMSE grid from stored checkpoints and emit tables
    sweep      train the full grid, evaluate, and emit tables
    report     re-emit tables from a stored results.json
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from . import dataset as ds
from . import harness
from .errors import ColdstartError
from .harness import ResultsTable


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="path to the key = value config file")
    parser.add_argument("--seed", type=int, default=None, help="override the configured seed list")
    parser.add_argument("--out", default=None, help="override the output directory")
    parser.add_argument("--strategy", default=None, help="restrict to one ranking strategy")
    parser.add_argument(
        "--full-retrain",
        action="store_true",
        help="refit the whole factor model per step instead of fold-in (slow)",
    )
    parser.add_argument(
        "--terminal-reward",
        action="store_true",
        help="pay the reciprocal-RMSE reward only at the end of the episode",
    )


def _load_config(args) -> harness.ExperimentConfig:
    overrides = {}
    if args.seed is not None:
        overrides["seeds"] = (args.seed,)
    if args.out is not None:
        overrides["out_dir"] = args.out
    if args.strategy is not None:
        overrides["strategies"] = (args.strategy,)
    if args.full_retrain:
        overrides["full_retrain"] = True
    if args.terminal_reward:
        overrides["terminal_reward"] = True
    return harness.load_config(args.config, **overrides)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="coldstart-rl")
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="emit a synthetic dataset CSV")
    _add_common(p_synth)
    p_synth.add_argument("--csv", default="interactions.csv", help="output CSV path")

    p_train = sub.add_parser("train", help="train one agent cell")
    _add_common(p_train)
    p_train.add_argument("--variant", choices=["dqn", "double", "dueling"], required=True)
    p_train.add_argument("--display-size", type=int, required=True)

    p_eval = sub.add_parser("evaluate", help="evaluate strategies and stored agents")
    _add_common(p_eval)
    p_eval.add_argument("--per-user-samples", action="store_true")

    p_sweep = sub.add_parser("sweep", help="train everything, evaluate, emit tables")
    _add_common(p_sweep)
    p_sweep.add_argument("--per-user-samples", action="store_true")

    p_report = sub.add_parser("report", help="re-emit tables from results.json")
    p_report.add_argument("--results", required=True)
    p_report.add_argument("--out", required=True)
    p_report.add_argument("--per-user-samples", action="store_true")

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except (ColdstartError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _dispatch(args) -> int:
    if args.command == "report":
        with open(args.results, encoding="utf-8") as fh:
            payload = json.load(fh)
        results = ResultsTable.from_jsonable(payload)
        grid = harness.t_test_matrix(
            harness.testable_subtable(results, args.per_user_samples),
            per_user=args.per_user_samples,
        )
        paths = harness.emit_tables(results, grid, args.out)
        print("\n".join(sorted(paths.values())))
        return 0

    config = _load_config(args)

    if args.command == "synth":
        if config.synthetic is None:
            raise ColdstartError("config has no synthetic.* section")
        data = ds.generate_synthetic(config.synthetic, config.data_seed)
        ds.save_interactions(data, args.csv)
        print(f"wrote {len(data)} interactions to {args.csv}")
        return 0

    if args.command == "train":
        for seed in config.seeds:
            ckpt = harness.run_training(config, args.variant, args.display_size, seed)
            print(f"checkpoint: {ckpt}")
        return 0

    if args.command == "evaluate":
        started = time.perf_counter()
        results = harness.run_evaluation(config)
        grid = harness.t_test_matrix(
            harness.testable_subtable(results, args.per_user_samples),
            per_user=args.per_user_samples,
        )
        paths = harness.emit_tables(
            results, grid, config.out_dir, config, wall_clock_s=time.perf_counter() - started
        )
        print("\n".join(sorted(paths.values())))
        return 0

    if args.command == "sweep":
        paths = harness.run_sweep(config, per_user_samples=args.per_user_samples)
        print("\n".join(sorted(paths.values())))
        return 0

    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
