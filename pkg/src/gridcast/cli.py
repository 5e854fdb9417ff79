"""``gridcast`` command line: one subcommand per pipeline stage, plus ``synth`` and ``all``."""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import GridcastError
from .pipeline import Command, load_config, run_pipeline, write_synthetic
from .preprocess import ScaleMethod

log = logging.getLogger("gridcast")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gridcast", description="Day-ahead building power forecasting.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    stage = argparse.ArgumentParser(add_help=False)
    stage.add_argument("--config", required=True, help="pipeline config JSON")
    stage.add_argument("--seed", type=int, help="override the config seed")
    stage.add_argument("--norm", choices=[m.value for m in ScaleMethod], help="override normalization")
    stage.add_argument("--impute", choices=["mean", "poly"], help="override the test-time imputer")
    stage.add_argument("--out", help="override the output directory")
    for cmd in Command:
        sub.add_parser(cmd.value, parents=[stage], help=f"run the {cmd.value} stage")
    sub.add_parser("all", parents=[stage], help="preprocess, train, predict, evaluate and heatmap")

    synth = sub.add_parser("synth", help="write a synthetic dataset and config")
    synth.add_argument("out", help="target directory")
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--level-shift", type=float, default=0.0, help="test-level shift as a fraction of range")
    synth.add_argument("--train-days", type=int, default=365)
    return parser


def _config(args):
    cfg = load_config(args.config)
    changes = {
        k: v
        for k, v in (("seed", args.seed), ("norm", args.norm), ("impute", args.impute), ("out_dir", args.out))
        if v is not None
    }
    return cfg.replace(**changes) if changes else cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "synth":
            info = write_synthetic(args.out, args.seed, args.level_shift, train_days=args.train_days)
            print(info["config"])
            return 0
        cfg = _config(args)
        commands = list(Command) if args.command == "all" else [Command(args.command)]
        for cmd in commands:
            result = run_pipeline(cfg, cmd)
            if cmd is Command.EVALUATE:
                m = result["mean"]
                print(f"{cfg.norm}: RMSE {m.rmse:.2f} W  MAE {m.mae:.2f} W  MAPE {m.mape:.2f}%  Acc {m.accuracy:.2f}%")
        print(cfg.run_dir)
        return 0
    except (GridcastError, OSError, ValueError) as exc:
        msg = " ".join(str(exc).split())
        print(f"gridcast: error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
