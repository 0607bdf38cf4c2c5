"""Command-line entry point."""
import argparse
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from birotation.commands import COMMANDS
from birotation.commands.common import REPORT_LOGGER
from birotation.config import settings
from birotation.errors import BirotationError, InputError, SolverError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_SOLVER = 2

LOG_FORMAT = "[%(name)s] %(levelname)s: %(message)s"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="birotation",
        description="Relative pose estimation of two calibrated views with birotation models.",
    )
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def configure_logging(verbosity: int) -> None:
    """Logs go to stderr; stdout carries report text only."""
    if verbosity >= 2:
        level = logging.DEBUG
    elif verbosity == 1:
        level = logging.INFO
    else:
        level = getattr(logging, settings.log_level.upper(), logging.WARNING)
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)
    logging.getLogger(REPORT_LOGGER).setLevel(min(level, logging.INFO))


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; usage errors share the input-error status.
        return EXIT_OK if exc.code in (0, None) else EXIT_INPUT

    configure_logging(args.verbose)
    try:
        args.handler(args)
    except InputError as e:
        logger.error(str(e))
        return EXIT_INPUT
    except ValidationError as e:
        logger.error(f"invalid input: {e}")
        return EXIT_INPUT
    except SolverError as e:
        logger.error(f"solver failed: {e}")
        return EXIT_SOLVER
    except BirotationError as e:
        logger.error(str(e))
        return EXIT_SOLVER
    return EXIT_OK
