"""Command-line entry point: ``dion2 {train,bench,verify}``.

Exit codes: 0 success, 1 numerical or invariant failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, replace
from pathlib import Path

from . import bench, trainer
from .config import parse_config
from .errors import ConfigError, NumericalError

EXIT_OK, EXIT_FAILURE, EXIT_CONFIG = 0, 1, 2


def _global_flags() -> argparse.ArgumentParser:
    # SUPPRESS keeps a flag given before the subcommand from being reset by
    # the subparser's default.
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="override every seed in the config")
    p.add_argument("--out-dir", default=argparse.SUPPRESS, help="directory for output files (default: .)")
    p.add_argument("--format", choices=("csv", "json"), default=argparse.SUPPRESS, help="output format (default: csv)")
    return p


def build_parser() -> argparse.ArgumentParser:
    flags = _global_flags()
    parser = argparse.ArgumentParser(
        prog="dion2", description="Experiments and invariant checks for Muon-family optimizers.", parents=[flags]
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("train", parents=[flags], help="run a training experiment from a JSON config")
    p.add_argument("config")
    p = sub.add_parser("bench", parents=[flags], help="run the optimizer step-time benchmark")
    p.add_argument("config")
    p = sub.add_parser("verify", parents=[flags], help="run the invariant verification battery")
    p.add_argument("level", choices=("quick", "full"))
    return parser


def _out_path(args, stem: str) -> Path:
    out = Path(getattr(args, "out_dir", "."))
    out.mkdir(parents=True, exist_ok=True)
    return out / f"{stem}.{getattr(args, 'format', 'csv')}"


def cmd_train(args) -> int:
    cfg = parse_config(args.config, "run")
    if hasattr(args, "seed"):
        cfg = replace(
            cfg,
            task=replace(cfg.task, dataset_seed=args.seed),
            optimizer=replace(cfg.optimizer, seed=args.seed),
        )
    reports = trainer.run(replace(cfg, log_path=None))
    path = _out_path(args, "train")
    if getattr(args, "format", "csv") == "json":
        path.write_text(json.dumps([asdict(r) for r in reports], indent=2) + "\n")
    else:
        path.write_text(trainer.reports_to_csv(reports), newline="")
    if cfg.log_path:
        trainer.write_reports_csv(reports, cfg.log_path)
    last = reports[-1]
    print(f"train: {len(reports)} reports, final loss {last.train_loss:.6g} -> {path}")
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = parse_config(args.config, "bench")
    if hasattr(args, "seed"):
        cfg = replace(cfg, seed=args.seed)
    rows = bench.bench_step_time(cfg)
    path = _out_path(args, "bench")
    if getattr(args, "format", "csv") == "json":
        path.write_text(bench.rows_to_json(rows))
    else:
        path.write_text(bench.rows_to_csv(rows), newline="")
    print(f"bench: {len(rows)} rows -> {path}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_suites

    ok = run_suites(args.level, seed=getattr(args, "seed", 0))
    return EXIT_OK if ok else EXIT_FAILURE


COMMANDS = {"train": cmd_train, "bench": cmd_bench, "verify": cmd_verify}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
