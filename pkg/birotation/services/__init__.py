"""File services."""
from birotation.services.fileio import (
    dump_json,
    expand_pose_paths,
    format_sweep,
    load_model,
    parse_sweep,
    read_correspondences,
    read_json,
    read_pose,
    write_model,
    write_text,
)

__all__ = [
    "dump_json", "expand_pose_paths", "format_sweep", "load_model", "parse_sweep",
    "read_correspondences", "read_json", "read_pose", "write_model", "write_text",
]
