"""Data model, ingestion, and validation for benchmark layout records.

A layout record is a captioned scene: a global caption, 2 to 10 named
instances each with its own caption and normalized box, and optional
pairwise relationship phrases between instances. This module parses the
record-per-line annotation format, enforces every structural invariant,
and implements the pair-validity and record-eligibility filters used to
curate the benchmark.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from json import JSONDecodeError
from pathlib import Path
from typing import IO, Iterable, Sequence

from layouteval.geometry import BBox, ImageDims, area, intersect, iou
from layouteval.jsonlio import iter_jsonl, write_jsonl

ALLOWED_SPLITS = ("simple", "regular", "complex")

# Threshold defaults for a pair of boxes to count as validly overlapping:
# IoU strictly above 5% and intersection strictly above 1% of image area.
DEFAULT_IOU_MIN = 0.05
DEFAULT_AREA_MIN = 0.01

# Relationship phrases meaning "no relationship worth stating"; dropped
# at ingestion so downstream relation metrics see only real phrases.
_NULL_PHRASES = frozenset({"none"})


@dataclass(frozen=True)
class InstanceAnnotation:
    """One named instance: identifier, local caption, and normalized box."""

    name: str
    caption: str
    bbox: BBox

    def __post_init__(self) -> None:
        if not self.name or not self.name.strip():
            raise ValueError("instance name must be non-empty")
        if not self.caption or not self.caption.strip():
            raise ValueError(f"instance {self.name!r}: caption must be non-empty")


@dataclass(frozen=True)
class RelationshipAnnotation:
    """A directed relationship phrase between two named instances."""

    subject: str
    object: str
    phrase: str

    def __post_init__(self) -> None:
        if self.subject == self.object:
            raise ValueError(f"relationship subject and object are both {self.subject!r}")
        if not self.phrase or not self.phrase.strip():
            raise ValueError(
                f"relationship {self.subject!r}->{self.object!r}: phrase must be non-empty"
            )


@dataclass(frozen=True)
class LayoutRecord:
    """A complete annotated layout, immutable after construction.

    Invariants enforced here: 2 to 10 instances, unique instance names,
    and every relationship endpoint resolving to an instance name.
    """

    id: str
    global_caption: str
    dims: ImageDims
    instances: tuple[InstanceAnnotation, ...]
    relationships: tuple[RelationshipAnnotation, ...] = ()
    split: str | None = None

    def __post_init__(self) -> None:
        if not self.id or not self.id.strip():
            raise ValueError("record id must be non-empty")
        if not self.global_caption or not self.global_caption.strip():
            raise ValueError(f"record {self.id!r}: global caption must be non-empty")
        object.__setattr__(self, "instances", tuple(self.instances))
        object.__setattr__(self, "relationships", tuple(self.relationships))
        n = len(self.instances)
        if not 2 <= n <= 10:
            raise ValueError(f"record {self.id!r}: instance count {n} out of range 2..10")
        names = [inst.name for inst in self.instances]
        seen = set()
        for name in names:
            if name in seen:
                raise ValueError(f"record {self.id!r}: duplicate instance name {name!r}")
            seen.add(name)
        for rel in self.relationships:
            for endpoint in (rel.subject, rel.object):
                if endpoint not in seen:
                    raise ValueError(
                        f"record {self.id!r}: unknown endpoint {endpoint!r} in relationship"
                    )
        if self.split is not None and self.split not in ALLOWED_SPLITS:
            raise ValueError(
                f"record {self.id!r}: split {self.split!r} not one of {ALLOWED_SPLITS}"
            )

    def instance(self, name: str) -> InstanceAnnotation:
        for inst in self.instances:
            if inst.name == name:
                return inst
        raise KeyError(name)


@dataclass(frozen=True)
class ValidPair:
    """An unordered instance pair that clears both overlap thresholds."""

    i: str
    j: str
    iou: float
    inter_area: float


@dataclass(frozen=True)
class Diagnostic:
    """One rejected input line: where, which record, and why."""

    line: int
    record_id: str | None
    reason: str

    def __str__(self) -> str:
        rid = self.record_id if self.record_id else "<no id>"
        return f"line {self.line}: record {rid}: {self.reason}"


def record_to_dict(record: LayoutRecord) -> dict:
    """Serialize a record to its annotation-file object form."""
    out: dict = {
        "id": record.id,
        "caption": record.global_caption,
        "width": record.dims.width_px,
        "height": record.dims.height_px,
        "instances": [
            {
                "name": inst.name,
                "caption": inst.caption,
                "bbox": list(inst.bbox.as_tuple()),
            }
            for inst in record.instances
        ],
        "relationships": [
            {"subject": rel.subject, "object": rel.object, "phrase": rel.phrase}
            for rel in record.relationships
        ],
    }
    if record.split is not None:
        out["split"] = record.split
    return out


def _record_from_dict(obj: dict) -> LayoutRecord:
    """Build a LayoutRecord from a parsed line, raising ValueError on any violation."""
    if not isinstance(obj, dict):
        raise ValueError(f"record must be an object, got {type(obj).__name__}")
    for key in ("id", "caption", "width", "height", "instances"):
        if key not in obj:
            raise ValueError(f"missing required field {key!r}")
    rid = obj["id"]
    if not isinstance(rid, str):
        raise ValueError(f"id must be a string, got {rid!r}")
    if not isinstance(obj["width"], int) or not isinstance(obj["height"], int):
        raise ValueError("width and height must be integers")
    dims = ImageDims(obj["width"], obj["height"])
    instances = []
    if not isinstance(obj["instances"], list):
        raise ValueError("instances must be a list")
    for inst in obj["instances"]:
        if not isinstance(inst, dict):
            raise ValueError("each instance must be an object")
        for key in ("name", "caption", "bbox"):
            if key not in inst:
                raise ValueError(f"instance missing field {key!r}")
        bbox = inst["bbox"]
        if not isinstance(bbox, list) or len(bbox) != 4:
            raise ValueError(f"instance {inst.get('name')!r}: bbox must be [x1,y1,x2,y2]")
        instances.append(
            InstanceAnnotation(
                name=inst["name"], caption=inst["caption"], bbox=BBox(*bbox)
            )
        )
    relationships = []
    for rel in obj.get("relationships", []) or []:
        if not isinstance(rel, dict):
            raise ValueError("each relationship must be an object")
        for key in ("subject", "object", "phrase"):
            if key not in rel:
                raise ValueError(f"relationship missing field {key!r}")
        phrase = rel["phrase"]
        if isinstance(phrase, str) and phrase.strip().lower() in _NULL_PHRASES:
            continue  # explicit "no relationship" marker, not stored
        relationships.append(
            RelationshipAnnotation(
                subject=rel["subject"], object=rel["object"], phrase=phrase
            )
        )
    return LayoutRecord(
        id=rid,
        global_caption=obj["caption"],
        dims=dims,
        instances=tuple(instances),
        relationships=tuple(relationships),
        split=obj.get("split"),
    )


def parse_dataset(
    source: str | Path | IO,
) -> tuple[list[LayoutRecord], list[Diagnostic]]:
    """Parse an annotation file into records plus rejection diagnostics.

    Every malformed line or invariant violation becomes one Diagnostic;
    nothing is silently dropped. Record ids must be unique across the
    file; a repeated id rejects the later occurrence.
    """
    records: list[LayoutRecord] = []
    diagnostics: list[Diagnostic] = []
    seen_ids: set[str] = set()
    for line_no, obj in iter_jsonl(source):
        if isinstance(obj, JSONDecodeError):
            diagnostics.append(Diagnostic(line_no, None, f"invalid JSON: {obj.msg}"))
            continue
        rid = obj.get("id") if isinstance(obj, dict) else None
        rid = rid if isinstance(rid, str) else None
        try:
            record = _record_from_dict(obj)
        except (ValueError, KeyError, TypeError) as exc:
            diagnostics.append(Diagnostic(line_no, rid, str(exc)))
            continue
        if record.id in seen_ids:
            diagnostics.append(Diagnostic(line_no, record.id, "duplicate record id"))
            continue
        seen_ids.add(record.id)
        records.append(record)
    return records, diagnostics


def serialize_dataset(
    dest: str | Path | IO,
    records: Iterable[LayoutRecord],
    provenance: dict | None = None,
) -> int:
    """Write records in the annotation file format; returns the row count."""
    return write_jsonl(dest, (record_to_dict(r) for r in records), provenance)


def valid_overlap_pairs(
    record: LayoutRecord,
    iou_min: float = DEFAULT_IOU_MIN,
    area_min: float = DEFAULT_AREA_MIN,
) -> list[ValidPair]:
    """Instance pairs whose overlap clears both thresholds, strictly.

    A pair qualifies when IoU > iou_min and the intersection covers more
    than area_min of the image. Each unordered pair appears once with
    names in lexicographic order, and the list is sorted by descending
    IoU with a lexicographic name tie-break.
    """
    pairs: list[ValidPair] = []
    for a, b in itertools.combinations(record.instances, 2):
        inter = intersect(a.bbox, b.bbox)
        if inter is None:
            continue
        inter_area = area(inter)
        pair_iou = iou(a.bbox, b.bbox)
        if pair_iou > iou_min and inter_area > area_min:
            i, j = sorted((a.name, b.name))
            pairs.append(ValidPair(i=i, j=j, iou=pair_iou, inter_area=inter_area))
    pairs.sort(key=lambda p: (-p.iou, p.i, p.j))
    return pairs


def filter_benchmark_eligible(
    records: Sequence[LayoutRecord],
    iou_min: float = DEFAULT_IOU_MIN,
    area_min: float = DEFAULT_AREA_MIN,
) -> tuple[list[LayoutRecord], list[LayoutRecord]]:
    """Split records into (kept, rejected) by the 1..10 valid-pair rule.

    A record is benchmark-eligible iff it has at least one and at most
    ten valid overlapping pairs under the given thresholds.
    """
    kept: list[LayoutRecord] = []
    rejected: list[LayoutRecord] = []
    for record in records:
        n = len(valid_overlap_pairs(record, iou_min=iou_min, area_min=area_min))
        (kept if 1 <= n <= 10 else rejected).append(record)
    return kept, rejected
