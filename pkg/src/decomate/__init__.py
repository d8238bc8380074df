"""Decomate: restructure raw SVGs into animation-ready groups, author motion
via prompts or a deterministic DSL, and compile HTML/CSS/JS bundles."""

from .geometry import Affine2D, Rect, parse_path_data, parse_transform_list, path_bbox
from .grouping import GroupingSpec, apply_grouping, apply_refinement, validate_and_complete
from .motion import Easing, MotionSpec, Track, parse_motion_dsl, sample_easing
from .codegen import AnimationBundle, emit_bundle, emit_preview_html
from .svgdoc import SvgDocument, flatten_and_assign_ids, leaf_sequence, parse_svg, serialize_svg

__version__ = "0.1.0"

__all__ = [
    "Affine2D",
    "AnimationBundle",
    "Easing",
    "GroupingSpec",
    "MotionSpec",
    "Rect",
    "SvgDocument",
    "Track",
    "apply_grouping",
    "apply_refinement",
    "emit_bundle",
    "emit_preview_html",
    "flatten_and_assign_ids",
    "leaf_sequence",
    "parse_motion_dsl",
    "parse_path_data",
    "parse_svg",
    "parse_transform_list",
    "path_bbox",
    "sample_easing",
    "serialize_svg",
    "validate_and_complete",
]
