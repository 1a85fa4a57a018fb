"""Walk three layouts from sparse to crowded and watch the difficulty score.

Caption embeddings normally come from a CLIP service; here a seeded
generator stands in so the script runs offline and prints the same
numbers every time.
"""

import random

from layouteval import (
    BBox,
    EmbeddingStore,
    EmbeddingVector,
    ImageDims,
    InstanceAnnotation,
    LayoutRecord,
    bucket,
    overlay_score,
    score_distribution,
)

DIM = 16


def seeded_vector(text: str) -> EmbeddingVector:
    rng = random.Random(text)
    return EmbeddingVector.from_raw([rng.gauss(0.0, 1.0) for _ in range(DIM)])


def make_record(record_id: str, boxes: dict[str, tuple[float, float, float, float]]) -> LayoutRecord:
    instances = [
        InstanceAnnotation(name=name, caption=f"a photo of a {name.split('_')[0]}", bbox=BBox(*b))
        for name, b in boxes.items()
    ]
    return LayoutRecord(
        id=record_id,
        global_caption="a cluttered tabletop scene",
        dims=ImageDims(512, 512),
        instances=tuple(instances),
    )


def main() -> None:
    layouts = {
        "spread_out": {
            "cup_1": (0.05, 0.05, 0.25, 0.25),
            "plate_1": (0.6, 0.6, 0.9, 0.9),
        },
        "touching": {
            "cup_1": (0.2, 0.2, 0.5, 0.5),
            "plate_1": (0.4, 0.4, 0.8, 0.8),
        },
        "crowded": {
            "cup_1": (0.2, 0.2, 0.6, 0.6),
            "cup_2": (0.25, 0.25, 0.65, 0.65),
            "plate_1": (0.3, 0.3, 0.7, 0.7),
            "fork_1": (0.35, 0.2, 0.75, 0.55),
        },
    }

    store = EmbeddingStore(model="demo-seeded", dim=DIM)
    records = []
    for record_id, boxes in layouts.items():
        record = make_record(record_id, boxes)
        records.append(record)
        for inst in record.instances:
            if inst.caption not in store:
                store.add(inst.caption, seeded_vector(inst.caption))

    print("per-layout difficulty\n")
    scored = []
    for record in records:
        result = overlay_score(record, store)
        scored.append(result)
        label = bucket(result.score).label
        print(f"{record.id}: score {result.score:+.4f} -> {label}")
        for term in result.pair_terms:
            print(
                f"    {term.i} x {term.j}: iou {term.iou:.3f} * cos {term.cos:+.3f}"
                f" = {term.product:+.4f}"
            )
        if not result.pair_terms:
            print("    no overlapping pairs, score is 0")
        print()

    hist, summary = score_distribution(scored)
    print("score histogram (bin lower edge: count)")
    for edge, count in sorted(hist.items()):
        print(f"  {edge:5.1f}: {count}")
    if summary is not None:
        print(f"mean {summary.mean:.4f}, median {summary.median:.4f}, max {summary.max:.4f}")


if __name__ == "__main__":
    main()
