"""Flag parsing shared by the commands."""
import argparse
import logging
from typing import List, Tuple

from pydantic import ValidationError

from birotation.config import BETA_PRESETS, OutlierRule, SolverConfig, settings
from birotation.errors import InputError

# Run summary lines, shown at INFO even when the package logs at WARNING.
REPORT_LOGGER = "birotation.report"
report = logging.getLogger(REPORT_LOGGER)


def float_list(text: str) -> List[float]:
    """Comma-separated numbers, e.g. '1,3,5,10'."""
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'")


def float_triple(text: str) -> Tuple[float, float, float]:
    values = float_list(text)
    if len(values) != 3:
        raise argparse.ArgumentTypeError(f"expected three comma-separated numbers, got '{text}'")
    return tuple(values)


def int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'")


def verbosity_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("-v", "--verbose", action="count", default=0,
                        help="log INFO to stderr (repeat for DEBUG)")
    return parent


def add_solver_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("solver")
    group.add_argument("--alpha", type=float, help=f"regularization weight (default {settings.alpha:g})")
    weights = group.add_mutually_exclusive_group()
    weights.add_argument("--beta", type=float_triple, help="model selection weights b1,b2,b3 (default 1,1,1)")
    weights.add_argument("--preset", choices=sorted(BETA_PRESETS), help="named beta weights")
    group.add_argument("--tol-value", type=float, help=f"stop when d/N falls below this (default {settings.tol_value:g})")
    group.add_argument("--tol-rate", type=float, help=f"stop when the relative decrease falls below this (default {settings.tol_rate:g})")
    group.add_argument("--max-iters", type=int, help=f"iteration cap per model (default {settings.max_iters})")
    group.add_argument("--outlier-rule", choices=[r.value for r in OutlierRule],
                       help=f"per-iteration outlier weighting (default {settings.outlier_rule.value})")
    group.add_argument("--models", type=int_list, help="active birotation models, e.g. 1,3 (default 1,2,3)")
    group.add_argument("--disambiguate", action="store_true", help="pick among the four pose candidates by cheirality")
    group.add_argument("--seed", type=int, default=0, help="random seed (default 0)")


def solver_config_from_args(args: argparse.Namespace) -> SolverConfig:
    beta = args.beta
    if args.preset:
        beta = BETA_PRESETS[args.preset]
    try:
        return settings.solver_config(
            alpha=args.alpha,
            beta=beta,
            tol_value=args.tol_value,
            tol_rate=args.tol_rate,
            max_iters=args.max_iters,
            outlier_rule=args.outlier_rule,
            models=tuple(args.models) if args.models else None,
            disambiguate=args.disambiguate,
            seed=args.seed,
        )
    except ValidationError as e:
        raise InputError(f"invalid solver option: {validation_message(e)}") from e


def validation_message(error: ValidationError) -> str:
    first = error.errors()[0]
    field = ".".join(str(part) for part in first["loc"])
    return f"{field}: {first['msg']}" if field else first["msg"]


def format_beta(beta: Tuple[float, float, float]) -> str:
    return "(" + ",".join(f"{b:g}" for b in beta) + ")"
