"""`birotation synth`: write a synthetic correspondence file and its ground truth."""
import argparse
import logging
from pathlib import Path
from typing import Optional

from pydantic import ValidationError

from birotation.commands.common import validation_message, verbosity_parent
from birotation.errors import InputError
from birotation.evaluation.synthgen import (
    NoiseSpec,
    PoseKind,
    PoseSampler,
    SceneSpec,
    apply_noise,
    derive_seed,
    generate_scene,
)
from birotation.geometry.pose import Intrinsics
from birotation.schemas import CorrespondenceFile, PoseFile
from birotation.services.fileio import write_model

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "synth", parents=[verbosity_parent()],
        help="generate a synthetic two-view correspondence file",
        description="Sample cube points, a camera pose and noisy pixel matches.",
    )
    pose = parser.add_argument_group("pose")
    pose.add_argument("--pose", choices=[k.value for k in PoseKind], default=PoseKind.RANDOM.value)
    pose.add_argument("--max-deg", type=float, default=30.0, help="largest rotation angle (default 30)")
    pose.add_argument("--axis", type=int, default=1, choices=(1, 2, 3), help="axis for basis-aligned poses")
    pose.add_argument("--perturb-deg", type=float, default=0.0, help="tilt of basis-aligned poses")
    pose.add_argument("--sign", type=int, default=1, choices=(1, -1), help="translation sign for basis-aligned poses")

    scene = parser.add_argument_group("scene")
    scene.add_argument("--n-points", type=int, default=200)
    scene.add_argument("--depth", type=float, default=6.0, help="depth of the cube center (default 6)")
    scene.add_argument("--half-extent", type=float, default=2.0)
    scene.add_argument("--fx", type=float, default=600.0)
    scene.add_argument("--fy", type=float, default=600.0)
    scene.add_argument("--u0", type=float, default=320.0)
    scene.add_argument("--v0", type=float, default=320.0)

    noise = parser.add_argument_group("noise")
    noise.add_argument("--sigma", type=float, default=0.0, help="inlier pixel noise (default 0)")
    noise.add_argument("--mismatch-rate", type=float, default=0.0)
    noise.add_argument("--outlier-sigma", type=float, default=10.0)

    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="-", help="correspondence file to write (default stdout)")
    parser.add_argument("--truth-out", help="ground-truth pose file (default <out>.truth.json)")
    parser.set_defaults(handler=run)


def truth_path(out: str, truth_out: Optional[str]) -> Optional[Path]:
    if truth_out:
        return Path(truth_out)
    if out == "-":
        return None
    out = Path(out)
    return out.with_name(f"{out.stem}.truth.json")


def run(args: argparse.Namespace) -> None:
    try:
        spec = SceneSpec(
            n_points=args.n_points,
            cube_center=(0.0, 0.0, args.depth),
            cube_half_extent=args.half_extent,
            intrinsics=Intrinsics(fx=args.fx, fy=args.fy, u0=args.u0, v0=args.v0),
            pose=PoseSampler(kind=args.pose, max_deg=args.max_deg, axis=args.axis,
                             perturb_deg=args.perturb_deg, sign=args.sign),
            seed=derive_seed(args.seed, 0),
        )
        noise = NoiseSpec(sigma_px=args.sigma, mismatch_rate=args.mismatch_rate,
                          outlier_sigma_px=args.outlier_sigma)
    except ValidationError as e:
        raise InputError(f"invalid scene: {validation_message(e)}") from e

    pair = apply_noise(generate_scene(spec), noise, derive_seed(args.seed, 1))
    write_model(CorrespondenceFile.from_correspondences(pair.correspondences), args.out)

    target = truth_path(args.out, args.truth_out)
    if target is None:
        logger.warning("Correspondences went to stdout and no --truth-out was given; ground truth not written")
        return
    write_model(PoseFile.from_pose(pair.truth), target)
    logger.info(f"Wrote ground truth to {target}")
