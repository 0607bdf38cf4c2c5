"""`birotation solve`: estimate the relative pose of a correspondence file."""
import argparse
import logging

from birotation.commands.common import (
    add_solver_flags,
    format_beta,
    report,
    solver_config_from_args,
    verbosity_parent,
)
from birotation.schemas import PoseFile
from birotation.services.fileio import read_correspondences, read_pose, write_model
from birotation.solver.optimizer import PriorPose, solve

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "solve", parents=[verbosity_parent()],
        help="estimate the relative pose from a correspondence file",
        description="Estimate rotation and translation direction with the three birotation models.",
    )
    parser.add_argument("--input", required=True, help="correspondence file (JSON)")
    parser.add_argument("--prior", help="prior pose file; without it each model starts from its default axis")
    add_solver_flags(parser)
    parser.add_argument("--out", default="-", help="pose file to write (default stdout)")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> None:
    cfg = solver_config_from_args(args)
    report.info(f"beta={format_beta(cfg.beta)}")

    correspondences = read_correspondences(args.input)
    prior = PriorPose()
    if args.prior:
        pose = read_pose(args.prior)
        prior = PriorPose(pose.rotation, pose.translation)
    logger.info(f"Solving {len(correspondences)} correspondences from {args.input}")

    estimate = solve(correspondences, prior, cfg)
    write_model(PoseFile.from_estimate(estimate, beta=cfg.beta), args.out)
