"""`birotation sweep`: synthetic noise or mismatch benchmark."""
import argparse
import logging
from typing import List, Optional

from birotation.commands.common import add_solver_flags, solver_config_from_args, verbosity_parent
from birotation.config import settings
from birotation.errors import InputError
from birotation.evaluation.synthgen import NoiseSpec, SceneSpec, SweepKind, make_grid, sweep
from birotation.services.fileio import format_sweep, write_text

logger = logging.getLogger(__name__)

MAX_MISMATCH_RATE = 0.3


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "sweep", parents=[verbosity_parent()],
        help="mean errors over a grid of noise levels or mismatch rates",
        description="Average rotation and translation errors of independent synthetic pairs per grid value.",
    )
    parser.add_argument("--kind", choices=[k.value for k in SweepKind], required=True)
    parser.add_argument("--grid", help="start:stop:step or a comma-separated list "
                                       "(default 0:2:0.02 for noise, 0:0.3:0.01 for mismatch)")
    parser.add_argument("--pairs", type=int, default=100, help="pairs per grid value (default 100)")
    parser.add_argument("--points", type=int, default=200, help="points per pair (default 200)")
    parser.add_argument("--sigma", type=float, default=0.1, help="inlier pixel noise of mismatch sweeps (default 0.1)")
    parser.add_argument("--outlier-sigma", type=float, default=10.0, help="pixel noise of mismatches (default 10)")
    parser.add_argument("--prior-deg", type=float, default=5.0, help="prior perturbation in degrees (default 5)")
    parser.add_argument("--workers", type=int, default=settings.sweep_workers, help="worker processes")
    add_solver_flags(parser)
    parser.add_argument("--out", default="-", help="CSV report (default stdout)")
    parser.set_defaults(handler=run)


def parse_grid(text: Optional[str]) -> Optional[List[float]]:
    if text is None:
        return None
    try:
        if ":" in text:
            start, stop, step = (float(p) for p in text.split(":"))
            return make_grid(start, stop, step)
        values = [float(p) for p in text.split(",") if p.strip()]
    except ValueError as e:
        raise InputError(f"invalid grid '{text}': {e}") from e
    if not values:
        raise InputError("grid is empty")
    return values


def run(args: argparse.Namespace) -> None:
    kind = SweepKind(args.kind)
    grid = parse_grid(args.grid)
    if grid is not None and min(grid) < 0:
        raise InputError("grid values must be non-negative")
    if grid is not None and kind is SweepKind.MISMATCH and max(grid) > MAX_MISMATCH_RATE:
        raise InputError(f"mismatch rates must not exceed {MAX_MISMATCH_RATE}")
    if args.pairs < 1 or args.points < 8 or args.workers < 1:
        raise InputError("--pairs and --workers must be positive and --points at least 8")

    cfg = solver_config_from_args(args)
    records = sweep(
        kind,
        SceneSpec(n_points=args.points),
        cfg,
        grid=grid,
        pairs=args.pairs,
        noise=NoiseSpec(sigma_px=args.sigma if kind is SweepKind.MISMATCH else 0.0,
                        outlier_sigma_px=args.outlier_sigma),
        prior_deg=args.prior_deg,
        seed=args.seed,
        workers=args.workers,
    )
    write_text(format_sweep(records), args.out)
