"""Reading and writing correspondence, pose and report files."""
import json
import logging
import math
import os
import sys
import tempfile
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Type, TypeVar, Union

import numpy as np
from pydantic import BaseModel, ValidationError

from birotation.errors import InputError, InvalidRotation
from birotation.evaluation.synthgen import SweepRecord
from birotation.geometry.pose import CorrespondenceSet, Pose
from birotation.geometry.so3 import RotationSO3, rotation_error_max
from birotation.schemas import CorrespondenceFile, PoseFile

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
Model = TypeVar("Model", bound=BaseModel)

# Pose file rotations within this deviation are accepted as they are.
POSE_ACCEPT_TOL = 1e-6
# Beyond the accept tolerance and up to this one they are re-orthonormalized.
POSE_REPAIR_TOL = 1e-3

SWEEP_HEADER = ("value", "mean_eps_r", "mean_eps_t", "failures", "pairs")


def read_json(path: PathLike) -> dict:
    """Parse a JSON document, reporting the line and column of syntax errors."""
    try:
        with open(path, "r") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise InputError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from e
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror or e}") from e


def load_model(model: Type[Model], path: PathLike) -> Model:
    data = read_json(path)
    try:
        return model.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(part) for part in first["loc"]) or "<root>"
        raise InputError(f"{path}: field '{field}': {first['msg']}") from e


def read_correspondences(path: PathLike) -> CorrespondenceSet:
    return load_model(CorrespondenceFile, path).to_correspondences()


def rotation_from_file(values: Sequence[float], source: str = "pose file") -> RotationSO3:
    """Accept at 1e-6, repair with a warning up to 1e-3, reject beyond."""
    m = np.asarray(values, dtype=np.float64).reshape(3, 3)
    deviation = rotation_error_max(m)
    if deviation <= POSE_ACCEPT_TOL:
        return RotationSO3.from_matrix(m, repair_tol=POSE_ACCEPT_TOL)
    if deviation <= POSE_REPAIR_TOL:
        logger.warning(f"{source}: rotation deviates from SO(3) by {deviation:.3g}; re-orthonormalizing")
        return RotationSO3.from_matrix(m, repair_tol=POSE_REPAIR_TOL)
    raise InvalidRotation(f"{source}: rotation deviates from SO(3) by {deviation:.3g}")


def pose_from_file(pose_file: PoseFile, source: str = "pose file") -> Pose:
    return Pose(rotation_from_file(pose_file.rotation, source), np.asarray(pose_file.translation))


def read_pose(path: PathLike) -> Pose:
    return pose_from_file(load_model(PoseFile, path), str(path))


def expand_pose_paths(paths: Iterable[PathLike]) -> List[Path]:
    """Files as given; directories contribute their *.json files in name order."""
    result = []
    for p in paths:
        p = Path(p)
        if p.is_dir():
            result.extend(sorted(p.glob("*.json")))
        else:
            result.append(p)
    return result


def dump_json(model: BaseModel) -> str:
    """JSON text with shortest round-trip float representation."""
    return json.dumps(model.model_dump(mode="json", exclude_none=True), indent=2) + "\n"


def write_text(text: str, path: Optional[PathLike] = None) -> None:
    """Write to path atomically (temp file then rename); None or '-' means stdout."""
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    logger.debug(f"Wrote {target}")


def write_model(model: BaseModel, path: Optional[PathLike] = None) -> None:
    write_text(dump_json(model), path)


def _number(value: float) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if math.isnan(value):
        return "nan"
    return f"{value:.17g}"


def format_sweep(records: Sequence[SweepRecord]) -> str:
    """Comma-separated sweep table, ascending by parameter value."""
    lines = [",".join(SWEEP_HEADER)]
    for r in sorted(records, key=lambda r: r.value):
        lines.append(",".join(_number(v) for v in (r.value, r.mean_eps_r, r.mean_eps_t, r.failures, r.pairs)))
    return "\n".join(lines) + "\n"


def parse_sweep(text: str) -> List[SweepRecord]:
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines or tuple(lines[0].split(",")) != SWEEP_HEADER:
        raise InputError("sweep report header is missing or malformed")
    records = []
    for number, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(SWEEP_HEADER):
            raise InputError(f"sweep report line {number}: expected {len(SWEEP_HEADER)} columns")
        records.append(SweepRecord(float(parts[0]), float(parts[1]), float(parts[2]),
                                   int(parts[3]), int(parts[4])))
    return records
