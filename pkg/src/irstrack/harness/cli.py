"""Command line: ``irstrack run | train | report``."""

import argparse
import logging
import sys

from ..channel import SystemConfig
from ..exceptions import ConfigurationError
from ..predictor import save_checkpoint
from .config import load_config, load_hyper
from .experiments import (
    DEFAULT_HORIZON,
    DEFAULT_TRIALS,
    DESK_HYPER,
    DESK_PREDICTOR_CONFIG,
    PRESETS,
    run_experiment,
    summarize,
    train_predictor,
    write_results,
)

logger = logging.getLogger("irstrack")


def build_parser():
    parser = argparse.ArgumentParser(prog="irstrack", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a Monte-Carlo scenario and write CSVs")
    run.add_argument("scenario", choices=sorted(PRESETS))
    run.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", default="results")
    run.add_argument("--config", help="YAML file with SystemConfig fields")
    run.add_argument("--intervals", type=int, default=DEFAULT_HORIZON, help="tracking horizon")
    run.add_argument("--case", choices=("special", "general"), default="special", help="custom scenario only")
    run.add_argument("--cga", choices=("I", "II"), default="II", help="custom scenario only")
    run.add_argument("--hyper", help="YAML predictor hyper-parameters for two-stage scenarios")

    train = sub.add_parser("train", help="train an observation predictor and save a checkpoint")
    train.add_argument("--hyper", help="YAML predictor hyper-parameters")
    train.add_argument("--checkpoint", required=True)
    train.add_argument("--config", help="YAML file with SystemConfig fields")
    train.add_argument("--case", choices=("special", "general"), default="special")
    train.add_argument("--strategy", choices=("A", "B"), default=None)
    train.add_argument("--seed", type=int, default=0)

    report = sub.add_parser("report", help="summarize the CSVs of a results directory")
    report.add_argument("directory")
    return parser


def _base_config(path, case, desk=False):
    maker = SystemConfig.special_case if case == "special" else SystemConfig.general_case
    base = maker(**(DESK_PREDICTOR_CONFIG if desk else {}))
    return load_config(path, base) if path else base


def _cmd_run(args):
    cfg = _base_config(args.config, args.case) if args.config else None
    options = {}
    if args.scenario == "custom":
        options.update(case=args.case, cga=args.cga)
    if args.hyper:
        options["hyper"] = {**DESK_HYPER, **load_hyper(args.hyper)}
    result = run_experiment(args.scenario, args.trials, args.seed, cfg, args.intervals, **options)
    for path in write_results(result, args.out):
        print(path)
    return 0


def _cmd_train(args):
    hyper = {**DESK_HYPER, **(load_hyper(args.hyper) if args.hyper else {})}
    strategy = args.strategy or hyper.get("strategy", "B")
    cfg = _base_config(args.config, args.case, desk=True)
    est = train_predictor(cfg, strategy, hyper, args.seed)
    save_checkpoint(est, args.checkpoint)
    val = est.history_["val_loss"]
    print(f"strategy {strategy}: validation loss {val[0]:.4g} -> {val[-1]:.4g}; saved {args.checkpoint}")
    return 0


def _cmd_report(args):
    for name, (n, mean) in summarize(args.directory).items():
        print(f"{name}: {n} intervals, final mean {mean:.4g}")
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    handlers = {"run": _cmd_run, "train": _cmd_train, "report": _cmd_report}
    try:
        return handlers[args.command](args)
    except (ConfigurationError, OSError) as exc:
        print(f"irstrack: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
