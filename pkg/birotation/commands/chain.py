"""`birotation chain`: compose consecutive relative poses into a trajectory."""
import argparse

from birotation.commands.common import verbosity_parent
from birotation.errors import InputError
from birotation.geometry.pose import chain_poses
from birotation.schemas import PoseFile, TrajectoryFile
from birotation.services.fileio import expand_pose_paths, read_pose, write_model


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "chain", parents=[verbosity_parent()],
        help="chain pair pose files into trajectory camera poses",
    )
    parser.add_argument("--poses", nargs="+", required=True, help="pose files or directories, in order")
    parser.add_argument("--scale", type=float, default=1.0, help="translation scale per step (default 1)")
    parser.add_argument("--out", default="-", help="trajectory file (default stdout)")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> None:
    paths = expand_pose_paths(args.poses)
    if not paths:
        raise InputError("no pose files found")
    frames = chain_poses([read_pose(p) for p in paths], scale=args.scale)
    write_model(TrajectoryFile(frames=[PoseFile.from_pose(f) for f in frames]), args.out)
