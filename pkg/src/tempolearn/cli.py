"""Command-line entry point.

    tempolearn list-presets
    tempolearn run <preset> [--seed N] [--scale desk|full] [--out DIR]
    tempolearn train --config FILE [--out DIR]
    tempolearn generate --config FILE [--seed N] [--out DIR]

Exit codes: 0 success (for `run`, all preset expectations hold), 1 preset
expectations failed, 2 usage or validation errors. The default output
directory is $TEMPOLEARN_OUT, falling back to ./out.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, OUT_DIR_ENV, load_config, build_dataset, \
    run_config
from .datasets import save_dataset_csv
from .numerics import Rng
from .presets import PRESET_IDS, preset_descriptions, run_preset


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tempolearn",
        description="Training-order experiments: smoothness schedules, "
                    "leaky-memory nets, multi-timescale autoencoders.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment preset")
    p_run.add_argument("preset", choices=PRESET_IDS, metavar="preset",
                       help=f"one of: {', '.join(PRESET_IDS)}")
    p_run.add_argument("--seed", type=int, default=1)
    p_run.add_argument("--scale", choices=("desk", "full"), default="desk")
    p_run.add_argument("--out", default=None,
                       help=f"output directory (default ${OUT_DIR_ENV} "
                            "or ./out)")

    p_train = sub.add_parser("train", help="train from a TOML config")
    p_train.add_argument("--config", required=True)
    p_train.add_argument("--out", default=None)

    p_gen = sub.add_parser("generate",
                           help="write a config's dataset to CSV")
    p_gen.add_argument("--config", required=True)
    p_gen.add_argument("--seed", type=int, default=None,
                       help="override the config's training.seed")
    p_gen.add_argument("--out", default=None)

    sub.add_parser("list-presets", help="list preset ids")
    return parser


def _cmd_run(args) -> int:
    result = run_preset(args.preset, args.seed, args.out, args.scale)
    for line in result.lines:
        print(f"  {line}")
    print(result.verdict_line())
    return 0 if result.passed else 1


def _cmd_train(args) -> int:
    result = run_config(args.config, args.out)
    print(f"wrote {result.curves_path} ({result.runs} run"
          f"{'s' if result.runs != 1 else ''})")
    return 0


def _cmd_generate(args) -> int:
    cfg = load_config(args.config)
    seed = args.seed if args.seed is not None else cfg["training"]["seed"]
    dataset = build_dataset(cfg, Rng(seed).spawn(0))
    out = Path(args.out) if args.out else Path("out")
    path = out if out.suffix == ".csv" \
        else out / f"{Path(args.config).stem}_dataset.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    save_dataset_csv(dataset, path)
    print(f"wrote {path} ({len(dataset)} samples, "
          f"{dataset.feature_dim} features)")
    return 0


def _cmd_list(_args) -> int:
    for preset_id, description in preset_descriptions():
        print(f"{preset_id:8s} {description}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "train": _cmd_train,
               "generate": _cmd_generate, "list-presets": _cmd_list}
    try:
        return handler[args.command](args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (FileNotFoundError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
