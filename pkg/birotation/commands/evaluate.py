"""`birotation eval`: compare estimated pose files with ground truth."""
import argparse
import logging

from birotation.commands.common import float_list, verbosity_parent
from birotation.errors import InputError, LengthMismatch
from birotation.evaluation.metrics import DEFAULT_THRESHOLDS, error_summary
from birotation.schemas import EvalReport, PairErrors
from birotation.services.fileio import expand_pose_paths, read_pose, write_model

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "eval", parents=[verbosity_parent()],
        help="rotation/translation errors and pose AUC",
        description="Pair estimate and truth pose files in order; directories expand to their *.json files.",
    )
    parser.add_argument("--est", nargs="+", required=True, help="estimated pose files or directories")
    parser.add_argument("--truth", nargs="+", required=True, help="ground-truth pose files or directories")
    parser.add_argument("--thresholds", type=float_list, default=list(DEFAULT_THRESHOLDS),
                        help="AUC thresholds in degrees (default 1,3,5,10)")
    parser.add_argument("--out", default="-", help="report file (default stdout)")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> None:
    est_paths = expand_pose_paths(args.est)
    truth_paths = expand_pose_paths(args.truth)
    if len(est_paths) != len(truth_paths):
        raise LengthMismatch(f"{len(est_paths)} estimate files but {len(truth_paths)} ground-truth files")
    if not est_paths:
        raise InputError("no pose files found")

    estimates = [read_pose(p) for p in est_paths]
    truths = [read_pose(p) for p in truth_paths]
    summary = error_summary(estimates, truths, args.thresholds)

    report = EvalReport(
        pairs=len(estimates),
        delta_theta_bar=[float(v) for v in summary.delta_theta_bar],
        delta_t_bar=[float(v) for v in summary.delta_t_bar],
        auc={f"{t:g}": v for t, v in summary.auc.items()},
        errors=[PairErrors(name=p.stem, eps_r=e.eps_r, eps_t=e.eps_t)
                for p, e in zip(est_paths, summary.errors)],
    )
    write_model(report, args.out)
