"""Command-line entry point: ``python -m app.main <command> --config FILE``.

Exit codes: 0 success, 2 configuration or argument error, 3 numerical
failure (stability, step budget, shooting, fits), 1 anything unexpected.
"""
import argparse
import sys
import time
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from app.cli import COMMAND_MODULES
from app.core.config import settings
from app.core.errors import ConfigError, LabError
from app.middleware.logging_middleware import LoggingMiddleware
from app.services.experiment_service import load_experiment
from app.utils.logger import logger

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_CONFIG = 2


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="Experiment file (INI)")
    common.add_argument("--out", type=Path, default=None, help="Output directory (overrides the experiment file)")
    common.add_argument("--workers", type=int, default=None, help="Worker processes for sweeps")
    common.add_argument(
        "--seedless", action="store_true", help="Reserved: nothing here draws random numbers; takes no value"
    )

    parser = argparse.ArgumentParser(prog="mems-lab", description=settings.DESCRIPTION)
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.VERSION}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for module in COMMAND_MODULES:
        module.register(subparsers, [common])
    return parser


def _run(args: argparse.Namespace) -> int:
    config = load_experiment(args.config, args.command)
    out_dir = Path(args.out or config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    workers = args.workers or settings.WORKERS
    if workers < 1:
        raise ConfigError(f"--workers must be positive, got {workers}")

    started = time.perf_counter()
    report = args.handler(config, out_dir, workers)
    report.wall_clock = time.perf_counter() - started
    logger.info(f"{args.command} wrote {', '.join(report.files)} to {out_dir} in {report.wall_clock:.2f}s")
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors and 0 on --help/--version
        return int(e.code or 0)

    try:
        settings.validate()
    except ConfigError as e:
        logger.error(f"Invalid settings: {e.detail}")
        return e.exit_code

    middleware = LoggingMiddleware(args.command, args.config, args.workers or settings.WORKERS)
    try:
        return middleware.dispatch(lambda: _run(args))
    except LabError as e:
        logger.error(f"{args.command} failed: {e.detail}")
        print(f"error: {e.detail}", file=sys.stderr)
        return e.exit_code
    except ValidationError as e:
        logger.error(f"{args.command} rejected its input: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as e:
        logger.exception(f"{args.command} failed unexpectedly: {e}")
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())
