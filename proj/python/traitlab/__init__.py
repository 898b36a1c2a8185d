"""Leakage-aware ablation tooling: splits, condition images, statistics."""

from traitlab._core import (
    TraitlabError,
    background_condition,
    build_splits,
    compare_correlations,
    compute_template,
    entire_frame_condition,
    extract_features,
    face_condition,
    fisher_z,
    image_set_sigma,
    normalize_template,
    overlap_stats,
    p_from_z,
    parse_clip_id,
    pearson,
    significance,
)

__all__ = [
    "TraitlabError",
    "background_condition",
    "build_splits",
    "compare_correlations",
    "compute_template",
    "entire_frame_condition",
    "extract_features",
    "face_condition",
    "fisher_z",
    "image_set_sigma",
    "normalize_template",
    "overlap_stats",
    "p_from_z",
    "parse_clip_id",
    "pearson",
    "significance",
]
