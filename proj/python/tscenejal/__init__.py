"""Python bindings for the TSceneJAL scene selection engine."""

from ._core import (
    Box3D,
    Detection,
    Scene,
    category_entropy,
    farthest_sampling,
    generate_pool,
    load_pool_dir,
    mixture_stats,
    parse_label_text,
    rank_by_entropy,
    rank_by_uncertainty,
    scene_uncertainty,
    serialize_label_file,
    similarity,
    similarity_matrix,
    simulate,
    three_stage_select,
)

__all__ = [
    "Box3D",
    "Detection",
    "Scene",
    "category_entropy",
    "farthest_sampling",
    "generate_pool",
    "load_pool_dir",
    "mixture_stats",
    "parse_label_text",
    "rank_by_entropy",
    "rank_by_uncertainty",
    "scene_uncertainty",
    "serialize_label_file",
    "similarity",
    "similarity_matrix",
    "simulate",
    "three_stage_select",
]
