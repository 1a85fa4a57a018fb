"""Layout difficulty scoring from pairwise overlap and caption similarity.

The score of a layout is the sum, over every unordered instance pair
whose boxes overlap, of the pair's IoU multiplied by the cosine
similarity of the two instance captions. Heavily overlapped layouts with
semantically close instances score high. Scores are bucketed into three
difficulty levels and summarized as a distribution.
"""

from __future__ import annotations

import itertools
import math
import statistics
from dataclasses import dataclass
from enum import IntEnum
from typing import Callable, Sequence

from layouteval.annotations import LayoutRecord
from layouteval.embeddings import (
    EmbeddingServiceClient,
    EmbeddingStore,
    cosine,
    get_embedding,
)
from layouteval.geometry import iou

DEFAULT_T_SIMPLE_REGULAR = 0.1
DEFAULT_T_REGULAR_COMPLEX = 0.5


class Bucket(IntEnum):
    """Difficulty levels ordered so comparisons follow difficulty."""

    SIMPLE = 0
    REGULAR = 1
    COMPLEX = 2

    @property
    def label(self) -> str:
        return self.name.lower()

    @staticmethod
    def from_label(label: str) -> "Bucket":
        return Bucket[label.upper()]


@dataclass(frozen=True)
class PairTerm:
    """One overlapping pair's contribution: iou * cos(caption_i, caption_j)."""

    i: str
    j: str
    iou: float
    cos: float
    product: float


@dataclass(frozen=True)
class ScoredLayout:
    """A record's difficulty score with its full per-pair breakdown."""

    record_id: str
    score: float
    pair_terms: tuple[PairTerm, ...]


@dataclass(frozen=True)
class DifficultyThresholds:
    """Cut points between the three difficulty buckets."""

    t_simple_regular: float = DEFAULT_T_SIMPLE_REGULAR
    t_regular_complex: float = DEFAULT_T_REGULAR_COMPLEX

    def __post_init__(self) -> None:
        if not 0 < self.t_simple_regular < self.t_regular_complex:
            raise ValueError(
                f"thresholds must satisfy 0 < t_simple_regular < t_regular_complex, "
                f"got {self.t_simple_regular} and {self.t_regular_complex}"
            )


def overlay_score(
    record: LayoutRecord,
    store: EmbeddingStore,
    fallback: EmbeddingServiceClient | None = None,
    clamp_negative_cos: bool = False,
) -> ScoredLayout:
    """Score one layout: sum of iou * caption-cosine over overlapping pairs.

    Every unordered pair with strictly positive IoU contributes exactly
    one term; layouts with no overlapping pair score 0. Negative cosines
    are kept unless clamp_negative_cos is set (sensitivity analysis).
    A missing caption embedding raises an error naming the instance.
    """
    terms: list[PairTerm] = []
    for a, b in itertools.combinations(record.instances, 2):
        pair_iou = iou(a.bbox, b.bbox)
        if pair_iou <= 0.0:
            continue
        try:
            emb_a = get_embedding(store, a.caption, fallback)
            emb_b = get_embedding(store, b.caption, fallback)
        except LookupError as exc:
            missing = a.name if a.caption not in store else b.name
            raise LookupError(
                f"record {record.id!r}: no embedding for caption of instance "
                f"{missing!r}: {exc}"
            ) from exc
        cos = cosine(emb_a, emb_b)
        if clamp_negative_cos and cos < 0.0:
            cos = 0.0
        terms.append(PairTerm(i=a.name, j=b.name, iou=pair_iou, cos=cos, product=pair_iou * cos))
    score = math.fsum(t.product for t in terms)
    return ScoredLayout(record_id=record.id, score=score, pair_terms=tuple(terms))


def bucket(score: float, thresholds: DifficultyThresholds | None = None) -> Bucket:
    """Assign a difficulty bucket; intervals are closed above on the lower bucket.

    score <= t_simple_regular is SIMPLE, score <= t_regular_complex is
    REGULAR, everything above is COMPLEX.
    """
    t = thresholds or DifficultyThresholds()
    if score <= t.t_simple_regular:
        return Bucket.SIMPLE
    if score <= t.t_regular_complex:
        return Bucket.REGULAR
    return Bucket.COMPLEX


@dataclass(frozen=True)
class DistributionSummary:
    mean: float
    median: float
    max: float


def score_distribution(
    scored: Sequence[ScoredLayout],
    bin_width: float = 0.1,
) -> tuple[dict[float, int], DistributionSummary | None]:
    """Histogram of scores (bin lower edge -> count) plus summary stats.

    Bin edges are multiples of bin_width; a score lands in the bin whose
    lower edge is floor(score / bin_width) * bin_width. Counts always sum
    to the input size. Empty input yields an empty histogram and no summary.
    """
    if bin_width <= 0:
        raise ValueError(f"bin_width must be positive, got {bin_width}")
    if not scored:
        return {}, None
    hist: dict[float, int] = {}
    for s in scored:
        edge = math.floor(s.score / bin_width) * bin_width
        hist[edge] = hist.get(edge, 0) + 1
    scores = [s.score for s in scored]
    summary = DistributionSummary(
        mean=statistics.fmean(scores),
        median=statistics.median(scores),
        max=max(scores),
    )
    return dict(sorted(hist.items())), summary


def scored_to_dict(s: ScoredLayout, b: Bucket) -> dict:
    """Serialize one scored record for the scored-output file."""
    return {
        "id": s.record_id,
        "score": s.score,
        "bucket": b.label,
        "pair_terms": [
            {"i": t.i, "j": t.j, "iou": t.iou, "cos": t.cos, "product": t.product}
            for t in s.pair_terms
        ],
    }


def scored_from_dict(obj: dict) -> tuple[ScoredLayout, Bucket]:
    """Parse one scored-output line back into (ScoredLayout, Bucket)."""
    terms = tuple(
        PairTerm(i=t["i"], j=t["j"], iou=t["iou"], cos=t["cos"], product=t["product"])
        for t in obj.get("pair_terms", [])
    )
    return (
        ScoredLayout(record_id=obj["id"], score=obj["score"], pair_terms=terms),
        Bucket.from_label(obj["bucket"]),
    )
