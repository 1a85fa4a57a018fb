"""Shared builders for tests: compact record/instance construction."""

import random

import pytest

from layouteval.annotations import InstanceAnnotation, LayoutRecord, RelationshipAnnotation
from layouteval.embeddings import EmbeddingStore, EmbeddingVector
from layouteval.geometry import BBox, ImageDims


def mk_inst(name: str, box: tuple[float, float, float, float], caption: str | None = None):
    return InstanceAnnotation(name=name, caption=caption or f"a {name}", bbox=BBox(*box))


def mk_record(record_id: str, insts, rels=(), split=None, caption="a scene"):
    return LayoutRecord(
        id=record_id,
        global_caption=caption,
        dims=ImageDims(512, 512),
        instances=tuple(insts),
        relationships=tuple(
            RelationshipAnnotation(subject=s, object=o, phrase=p) for s, o, p in rels
        ),
        split=split,
    )


def seeded_unit(key: str, dim: int = 8, salt: str = "") -> EmbeddingVector:
    """Deterministic pseudo-embedding: same key, same vector, any session."""
    rng = random.Random(f"{salt}|{key}")
    return EmbeddingVector.from_raw([rng.gauss(0.0, 1.0) for _ in range(dim)])


def caption_store(records, dim: int = 8, salt: str = "") -> EmbeddingStore:
    """Store holding one deterministic embedding per distinct caption."""
    store = EmbeddingStore(model="seeded-test", dim=dim)
    seen = set()
    for record in records:
        for caption in [record.global_caption] + [i.caption for i in record.instances]:
            if caption not in seen:
                seen.add(caption)
                store.add(caption, seeded_unit(caption, dim=dim, salt=salt))
    return store


@pytest.fixture
def three_instance_record():
    return mk_record(
        "rec_001",
        [
            mk_inst("cat_1", (0.1, 0.1, 0.5, 0.5)),
            mk_inst("dog_1", (0.3, 0.3, 0.7, 0.7)),
            mk_inst("tree_1", (0.75, 0.05, 0.95, 0.9)),
        ],
        rels=[("cat_1", "dog_1", "the cat sits beside the dog")],
    )
