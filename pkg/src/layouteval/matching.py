"""Detection-vs-layout evaluation: matched mIoU, overlap mIoU, success rates.

Ground-truth instances are matched one-to-one against predicted boxes by
maximizing total IoU (assignment solved in the standard minimization form
with cost 1 - IoU). On top of the matching sit three metric families:
mean IoU over ground-truth instances, overlap mIoU over the intersection
regions of instance pairs, and pooled yes/no success rates from judgment
files.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from json import JSONDecodeError
from pathlib import Path
from typing import IO, Literal, Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from layouteval.annotations import Diagnostic, LayoutRecord, ValidPair
from layouteval.geometry import BBox, intersect, iou
from layouteval.jsonlio import iter_jsonl

Scope = Literal["per_category", "global"]

_TRAILING_INDEX = re.compile(r"_\d+$")


def instance_category(name: str) -> str:
    """Category implied by an instance name: a trailing _<digits> is an index.

    "cat_2" -> "cat", "traffic_light_10" -> "traffic_light", "cat" -> "cat".
    """
    return _TRAILING_INDEX.sub("", name)


@dataclass(frozen=True)
class MatchPair:
    """One matched (ground truth, prediction) pair and its IoU."""

    gt_name: str
    pred_index: int
    iou: float


@dataclass(frozen=True)
class Matching:
    """A one-to-one assignment: matched pairs plus leftover ground truth."""

    pairs: tuple[MatchPair, ...]
    unmatched_gt: tuple[str, ...]

    def __post_init__(self) -> None:
        names = [p.gt_name for p in self.pairs] + list(self.unmatched_gt)
        if len(names) != len(set(names)):
            raise ValueError("a ground-truth name appears twice in the matching")
        indices = [p.pred_index for p in self.pairs]
        if len(indices) != len(set(indices)):
            raise ValueError("a prediction index appears twice in the matching")

    @property
    def total_iou(self) -> float:
        return math.fsum(p.iou for p in self.pairs)

    def by_gt(self) -> dict[str, MatchPair]:
        return {p.gt_name: p for p in self.pairs}


def _optimal_total(matrix: np.ndarray) -> float:
    """Maximum total IoU of any one-to-one assignment on the submatrix."""
    if matrix.size == 0:
        return 0.0
    rows, cols = linear_sum_assignment(1.0 - matrix)
    return math.fsum(float(matrix[r, c]) for r, c in zip(rows, cols))


def hungarian_match(
    gt: Sequence[tuple[str, BBox]],
    pred: Sequence[BBox],
    min_iou: float = 0.0,
) -> Matching:
    """Assign predictions to ground truth, maximizing total IoU.

    Rectangular cases behave as if padded with zero-IoU dummies: with
    fewer predictions than ground truth, the leftover ground truth comes
    back in unmatched_gt. Among equally good assignments the tie-break is
    deterministic: walking ground truth in order, each takes the lowest
    prediction index consistent with an optimal total, and a row is left
    unmatched only when every optimal assignment skips it.

    min_iou is an optional post-filter: matched pairs strictly below it
    are demoted to unmatched. Default 0 keeps every assignment, including
    zero-overlap ones.
    """
    if not gt:
        raise ValueError("ground truth must be non-empty")
    names = [name for name, _ in gt]
    if not pred:
        return Matching(pairs=(), unmatched_gt=tuple(names))

    n, m = len(gt), len(pred)
    matrix = np.empty((n, m), dtype=np.float64)
    for i, (_, gt_box) in enumerate(gt):
        for j, pred_box in enumerate(pred):
            matrix[i, j] = iou(gt_box, pred_box)

    # Fix rows one at a time: try each free column (lowest index first),
    # keeping a choice only if column IoU + optimum of the remainder beats
    # the best so far. Skipping is evaluated last so ties prefer a match.
    free_cols = list(range(m))
    chosen: list[tuple[int, int]] = []
    for i in range(n):
        rest = np.arange(i + 1, n)
        best_total = -1.0
        best_col: int | None = None
        for idx, j in enumerate(free_cols):
            other_cols = free_cols[:idx] + free_cols[idx + 1 :]
            total = float(matrix[i, j]) + _optimal_total(matrix[np.ix_(rest, other_cols)])
            if total > best_total:
                best_total, best_col = total, j
        skip_total = _optimal_total(matrix[np.ix_(rest, np.array(free_cols, dtype=int))])
        if skip_total > best_total:
            best_col = None
        if best_col is not None:
            chosen.append((i, best_col))
            free_cols.remove(best_col)

    pairs = []
    matched_rows = set()
    for i, j in chosen:
        pair_iou = float(matrix[i, j])
        if pair_iou < min_iou:
            continue
        matched_rows.add(i)
        pairs.append(MatchPair(gt_name=names[i], pred_index=j, iou=pair_iou))
    unmatched = tuple(names[i] for i in range(n) if i not in matched_rows)
    return Matching(pairs=tuple(pairs), unmatched_gt=unmatched)


@dataclass(frozen=True)
class DetectionSet:
    """All predicted boxes for one record and seed, grouped by category."""

    record_id: str
    seed: str
    categories: Mapping[str, tuple[BBox, ...]]

    def __post_init__(self) -> None:
        frozen: dict[str, tuple[BBox, ...]] = {}
        for category, boxes in self.categories.items():
            if not isinstance(category, str) or not category.strip():
                raise ValueError(f"detection category name {category!r} must be non-empty")
            frozen[category] = tuple(boxes)
        object.__setattr__(self, "categories", frozen)

    def all_boxes(self) -> list[BBox]:
        out: list[BBox] = []
        for category in sorted(self.categories):
            out.extend(self.categories[category])
        return out


def match_record(
    record: LayoutRecord,
    detections: DetectionSet,
    scope: Scope = "per_category",
    min_iou: float = 0.0,
) -> dict[str, tuple[BBox, float] | None]:
    """Match every instance of a record; None marks unmatched instances.

    per_category matches instances only against predictions of their own
    category (instance "cat_2" belongs to category "cat"); global throws
    all predictions into one pool.
    """
    if record.id != detections.record_id:
        raise ValueError(
            f"record id {record.id!r} does not match detections for {detections.record_id!r}"
        )
    result: dict[str, tuple[BBox, float] | None] = {i.name: None for i in record.instances}
    if scope == "global":
        groups = {None: [(i.name, i.bbox) for i in record.instances]}
        pools = {None: detections.all_boxes()}
    else:
        groups = {}
        for inst in record.instances:
            groups.setdefault(instance_category(inst.name), []).append((inst.name, inst.bbox))
        pools = {cat: list(detections.categories.get(cat, ())) for cat in groups}
    for cat, gt in groups.items():
        pool = pools[cat]
        matching = hungarian_match(gt, pool, min_iou=min_iou)
        for pair in matching.pairs:
            result[pair.gt_name] = (pool[pair.pred_index], pair.iou)
    return result


def miou(
    record: LayoutRecord,
    detections: DetectionSet,
    scope: Scope = "per_category",
    min_iou: float = 0.0,
) -> float:
    """Mean matched IoU over all ground-truth instances; unmatched count as 0."""
    matches = match_record(record, detections, scope=scope, min_iou=min_iou)
    values = [m[1] if m is not None else 0.0 for m in matches.values()]
    return math.fsum(values) / len(values)


@dataclass(frozen=True)
class PairRegionScore:
    """One instance pair's overlap-region IoU between truth and prediction."""

    i: str
    j: str
    value: float


@dataclass(frozen=True)
class OverlapMiouResult:
    value: float | None
    pair_scores: tuple[PairRegionScore, ...]
    excluded: tuple[Diagnostic, ...]


def o_miou(
    record: LayoutRecord,
    detections: DetectionSet,
    pairs: Sequence[ValidPair | tuple[str, str]] | None = None,
    scope: Scope = "per_category",
    min_iou: float = 0.0,
) -> OverlapMiouResult:
    """Mean IoU between ground-truth pair overlaps and predicted pair overlaps.

    For each instance pair (i, j) the ground-truth region is the
    intersection of their annotated boxes, and the predicted region is
    the intersection of their matched predictions. A pair with either
    instance unmatched, or whose matched predictions do not overlap,
    contributes 0. Pairs whose ground-truth boxes do not intersect are
    excluded with a diagnostic rather than scored.

    The default pair set is the record's relationship pairs; pass pairs
    explicitly (for example the valid-overlap pairs) to widen it. value
    is None when no pair survives exclusion.
    """
    if pairs is None:
        pair_names = [(rel.subject, rel.object) for rel in record.relationships]
    else:
        pair_names = [(p.i, p.j) if isinstance(p, ValidPair) else (p[0], p[1]) for p in pairs]
    matches = match_record(record, detections, scope=scope, min_iou=min_iou)
    scores: list[PairRegionScore] = []
    excluded: list[Diagnostic] = []
    for i_name, j_name in pair_names:
        gt_region = intersect(record.instance(i_name).bbox, record.instance(j_name).bbox)
        if gt_region is None:
            excluded.append(
                Diagnostic(0, record.id, f"pair ({i_name}, {j_name}): ground-truth boxes do not intersect")
            )
            continue
        match_i, match_j = matches.get(i_name), matches.get(j_name)
        if match_i is None or match_j is None:
            scores.append(PairRegionScore(i_name, j_name, 0.0))
            continue
        pred_region = intersect(match_i[0], match_j[0])
        if pred_region is None:
            scores.append(PairRegionScore(i_name, j_name, 0.0))
            continue
        scores.append(PairRegionScore(i_name, j_name, iou(gt_region, pred_region)))
    value = math.fsum(s.value for s in scores) / len(scores) if scores else None
    return OverlapMiouResult(value=value, pair_scores=tuple(scores), excluded=tuple(excluded))


@dataclass(frozen=True)
class RelationshipVerdict:
    subject: str
    object: str
    verdict: bool


@dataclass(frozen=True)
class JudgmentFile:
    """Yes/no verdicts for one record and seed, keyed by annotation names."""

    record_id: str
    seed: str
    entities: Mapping[str, bool]
    relationships: tuple[RelationshipVerdict, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "entities", dict(self.entities))
        object.__setattr__(self, "relationships", tuple(self.relationships))


@dataclass(frozen=True)
class SuccessRateResult:
    """Pooled yes/total plus each record's own rate."""

    pooled: float | None
    yes: int
    total: int
    per_record: Mapping[str, float]
    diagnostics: tuple[Diagnostic, ...]


def success_rate(
    judgments: Sequence[JudgmentFile],
    records_by_id: Mapping[str, LayoutRecord],
    kind: Literal["entity", "relationship"],
) -> SuccessRateResult:
    """Fraction of yes verdicts of one kind, pooled across all judgments.

    Verdicts that reference an unknown record, instance, or relationship
    pair are rejected with a diagnostic and excluded from both counts.
    """
    yes = total = 0
    per_record: dict[str, list[int]] = {}
    diagnostics: list[Diagnostic] = []
    for judgment in judgments:
        record = records_by_id.get(judgment.record_id)
        if record is None:
            diagnostics.append(
                Diagnostic(0, judgment.record_id, "judgment references unknown record")
            )
            continue
        counts = per_record.setdefault(judgment.record_id, [0, 0])
        d_yes = d_total = 0
        if kind == "entity":
            known = {inst.name for inst in record.instances}
            for name, verdict in judgment.entities.items():
                if name not in known:
                    diagnostics.append(
                        Diagnostic(0, judgment.record_id, f"verdict for unknown instance {name!r}")
                    )
                    continue
                d_total += 1
                d_yes += int(verdict)
        else:
            known_pairs = {
                frozenset((rel.subject, rel.object)) for rel in record.relationships
            }
            for rv in judgment.relationships:
                if frozenset((rv.subject, rv.object)) not in known_pairs:
                    diagnostics.append(
                        Diagnostic(
                            0,
                            judgment.record_id,
                            f"verdict for unknown pair ({rv.subject!r}, {rv.object!r})",
                        )
                    )
                    continue
                d_total += 1
                d_yes += int(rv.verdict)
        counts[0] += d_yes
        counts[1] += d_total
        yes += d_yes
        total += d_total
    rates = {rid: c[0] / c[1] for rid, c in per_record.items() if c[1] > 0}
    pooled = yes / total if total else None
    return SuccessRateResult(
        pooled=pooled, yes=yes, total=total, per_record=rates, diagnostics=tuple(diagnostics)
    )


def _parse_verdict(value, where: str) -> bool:
    if isinstance(value, str) and value.strip().lower() in ("yes", "no"):
        return value.strip().lower() == "yes"
    raise ValueError(f"{where}: verdict must be \"Yes\" or \"No\", got {value!r}")


def parse_detections(source: str | Path | IO) -> tuple[list[DetectionSet], list[Diagnostic]]:
    """Read a detection file: {id, seed, categories: {name: [[x1,y1,x2,y2], ...]}}."""
    out: list[DetectionSet] = []
    diagnostics: list[Diagnostic] = []
    for line_no, obj in iter_jsonl(source):
        if isinstance(obj, JSONDecodeError):
            diagnostics.append(Diagnostic(line_no, None, f"invalid JSON: {obj.msg}"))
            continue
        try:
            categories = {
                category: tuple(BBox(*coords) for coords in boxes)
                for category, boxes in obj["categories"].items()
            }
            out.append(
                DetectionSet(record_id=obj["id"], seed=str(obj["seed"]), categories=categories)
            )
        except (KeyError, TypeError, ValueError) as exc:
            diagnostics.append(Diagnostic(line_no, obj.get("id"), f"bad detection line: {exc}"))
    return out, diagnostics


def parse_judgments(source: str | Path | IO) -> tuple[list[JudgmentFile], list[Diagnostic]]:
    """Read a judgment file: {id, seed, entities: {name: Yes/No}, relationships: [...]}."""
    out: list[JudgmentFile] = []
    diagnostics: list[Diagnostic] = []
    for line_no, obj in iter_jsonl(source):
        if isinstance(obj, JSONDecodeError):
            diagnostics.append(Diagnostic(line_no, None, f"invalid JSON: {obj.msg}"))
            continue
        try:
            entities = {
                name: _parse_verdict(v, f"entity {name!r}")
                for name, v in (obj.get("entities") or {}).items()
            }
            relationships = tuple(
                RelationshipVerdict(
                    subject=rv["subject"],
                    object=rv["object"],
                    verdict=_parse_verdict(rv["verdict"], "relationship"),
                )
                for rv in (obj.get("relationships") or [])
            )
            out.append(
                JudgmentFile(
                    record_id=obj["id"],
                    seed=str(obj["seed"]),
                    entities=entities,
                    relationships=relationships,
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            diagnostics.append(Diagnostic(line_no, obj.get("id"), f"bad judgment line: {exc}"))
    return out, diagnostics
