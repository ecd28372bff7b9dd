# qssmix/harness/cli.py
"""
Command-line entry point.

    qssmix geometry-check --config lab.cfg --out results
    qssmix scaling --n-max 3
    qssmix --print-config

Exit codes: 0 all checks passed, 1 a check failed, 2 bad configuration, 3 solver abort.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Sequence

from ..core import ConfigError, SolverAbort
from .config import ExperimentConfig
from .suites import SUITES

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qssmix", description=__doc__.strip().splitlines()[0])
    parser.add_argument("command", nargs="?", choices=sorted(SUITES), help="suite to run")
    parser.add_argument("--config", type=Path, help="key = value configuration file")
    parser.add_argument("--out", type=Path, help="output directory (overrides `output`)")
    parser.add_argument("--seed", type=int, help="random seed (overrides `seed`)")
    parser.add_argument("--threads", type=int, help="concurrent jobs (overrides `threads`)")
    parser.add_argument("--n-max", type=int, dest="n_max", help="highest level (overrides `n_max`)")
    parser.add_argument("--print-config", action="store_true", help="print the effective configuration and exit")
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    config = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    if args.seed is not None and args.seed < 0:
        raise ConfigError("seed", f"must be a non-negative integer, got {args.seed}")
    return config.override(output=str(args.out) if args.out else None, seed=args.seed,
                           threads=args.threads, n_max=args.n_max)


def run(command: str, config: ExperimentConfig) -> int:
    out = Path(config.output)
    out.mkdir(parents=True, exist_ok=True)
    try:
        job = SUITES[command](config, out)
    except SolverAbort as exc:
        logger.error("solver aborted: %s", exc)
        return EXIT_SOLVER
    if not job.passed:
        for entry in job.failures:
            logger.error("failed: %s (%s) = %s", entry.name, entry.job, entry.value)
        return EXIT_CHECK_FAILED
    logger.info("%s: all %d checks passed", command, sum(e.kind == "check" for e in job.entries))
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args)
    except ConfigError as exc:
        logger.error("configuration error in %s", exc)
        return EXIT_CONFIG
    if args.print_config:
        sys.stdout.write(config.to_text())
        return EXIT_OK
    if args.command is None:
        logger.error("no command given; choose one of %s", ", ".join(sorted(SUITES)))
        return EXIT_CONFIG
    return run(args.command, config)


if __name__ == "__main__":
    sys.exit(main())
