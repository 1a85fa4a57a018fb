"""Evaluation toolkit for layout-to-image generation.

Scores layout difficulty from pairwise box overlap, curates benchmark
splits, computes overlap-aware generation metrics, and serves a small
audit workflow for human verification of curated records.
"""

from layouteval.annotations import (
    InstanceAnnotation,
    LayoutRecord,
    RelationshipAnnotation,
    ValidPair,
    filter_benchmark_eligible,
    parse_dataset,
    serialize_dataset,
    valid_overlap_pairs,
)
from layouteval.embeddings import (
    EmbeddingServiceClient,
    EmbeddingStore,
    EmbeddingVector,
    clip_score,
    cosine,
    get_embedding,
    load_store,
    save_store,
)
from layouteval.geometry import BBox, ImageDims, area, intersect, iou, normalize_box
from layouteval.losses import (
    AmodalMask,
    AttentionMap,
    LossWeights,
    combine_losses,
    eligen_average_attention,
    finite_diff_check,
    normalize_attention,
    pixel_loss,
    token_loss,
    total_loss,
)
from layouteval.matching import (
    DetectionSet,
    Matching,
    hungarian_match,
    match_record,
    miou,
    o_miou,
    success_rate,
)
from layouteval.reporting import AggregateCell, RunResult, aggregate, render
from layouteval.scoring import (
    Bucket,
    DifficultyThresholds,
    ScoredLayout,
    bucket,
    overlay_score,
    score_distribution,
)

__version__ = "0.1.0"

__all__ = [
    "AggregateCell",
    "AmodalMask",
    "AttentionMap",
    "BBox",
    "Bucket",
    "DetectionSet",
    "DifficultyThresholds",
    "EmbeddingServiceClient",
    "EmbeddingStore",
    "EmbeddingVector",
    "ImageDims",
    "InstanceAnnotation",
    "LayoutRecord",
    "LossWeights",
    "Matching",
    "RelationshipAnnotation",
    "RunResult",
    "ScoredLayout",
    "ValidPair",
    "aggregate",
    "area",
    "bucket",
    "clip_score",
    "combine_losses",
    "cosine",
    "eligen_average_attention",
    "filter_benchmark_eligible",
    "finite_diff_check",
    "get_embedding",
    "hungarian_match",
    "intersect",
    "iou",
    "load_store",
    "match_record",
    "miou",
    "normalize_attention",
    "normalize_box",
    "o_miou",
    "overlay_score",
    "parse_dataset",
    "pixel_loss",
    "render",
    "save_store",
    "score_distribution",
    "serialize_dataset",
    "success_rate",
    "token_loss",
    "total_loss",
    "valid_overlap_pairs",
    "__version__",
]
