"""Referring grasp benchmark toolkit.

Thin Python layer over the C++ core: grasp geometry, grasp maps, metrics,
synthetic scenes and the command-line tool.
"""

import json

from ._core import (
    DEFAULT_MAX_WIDTH,
    DEFAULT_SEED,
    DatasetError,
    GraspRectangle,
    MetricsError,
    SynthError,
    angle_difference_deg,
    decode_grasps,
    grasp_success,
    import_corner_grasps,
    normalize_grasp_angle,
    planar_predicate,
    precision_at,
    rect_from_corners,
    rect_iou,
    render_grasp_maps,
    ris_iou,
    run_cli,
    synthetic_scene,
)
from . import _core

__version__ = "0.1.0"


def default_catalog():
    """The built-in template catalog and lexicon as a dict."""
    return json.loads(_core.default_catalog_json())


def dataset_stats(root, threads=1):
    """compute_stats for the dataset at ``root`` as a dict."""
    return json.loads(_core.dataset_stats_json(str(root), threads))


def cli(*args):
    """Run the refgrasp command line in-process; returns (code, stdout, stderr)."""
    return run_cli([str(a) for a in args])
