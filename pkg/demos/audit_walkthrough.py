"""Run one audit session end to end: verdicts, a crash, replay, export.

Every verdict is fsynced to an append-only log before it is
acknowledged, so "crash" here is just dropping the service object and
rebuilding it from the same log file.
"""

import random
import tempfile
from pathlib import Path

from layouteval import BBox, ImageDims, InstanceAnnotation, LayoutRecord, bucket, parse_dataset
from layouteval.audit import AuditService, read_event_log, replay


def make_entries():
    """Four scored records; scores would normally come from overlay_score."""
    rng = random.Random(42)
    entries = []
    for k, score in enumerate([0.02, 0.31, 0.64, 0.47]):
        x1, y1 = rng.uniform(0.0, 0.4), rng.uniform(0.0, 0.4)
        boxes = {
            "box_1": (x1, y1, x1 + 0.4, y1 + 0.4),
            "box_2": (x1 + 0.1, y1 + 0.1, x1 + 0.5, y1 + 0.5),
        }
        record = LayoutRecord(
            id=f"rec_{k:03d}",
            global_caption=f"synthetic scene {k}",
            dims=ImageDims(512, 512),
            instances=tuple(
                InstanceAnnotation(name=n, caption=f"object {n}", bbox=BBox(*b))
                for n, b in boxes.items()
            ),
        )
        entries.append((record, score, bucket(score)))
    return entries


def main() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        log_path = Path(tmp) / "verdicts.log"
        service = AuditService(make_entries(), log_path)

        ## the queue starts all-pending, ordered by (bucket, id) ##
        tasks, _ = service.list_tasks()
        for task in tasks:
            print(f"{task.record.id}: {task.bucket.label:8s} score {task.score:.2f}  {task.status}")
        print()

        ## one auditor approves rec_000 and rejects rec_002 ##
        for check in service.checks:
            service.post_verdict("rec_000", check, True, auditor="pat")
        service.post_verdict("rec_002", "caption_alignment", False, auditor="pat")

        ## a retried submit with the same idempotency key does not double-log ##
        first, _ = service.post_verdict(
            "rec_001", "bbox_accuracy", True, auditor="pat", idempotency_key="k1"
        )
        retry, _ = service.post_verdict(
            "rec_001", "bbox_accuracy", True, auditor="pat", idempotency_key="k1"
        )
        print(f"retry answered with original event: seq {first.seq} == {retry.seq}")
        events = read_event_log(log_path)
        print(f"log holds {len(events)} events after 6 submissions (one was a retry)")
        print()

        ## crash: drop the service, rebuild from the log, compare states ##
        statuses = service.statuses()
        del service
        rebuilt = AuditService(make_entries(), log_path)
        assert rebuilt.statuses() == statuses
        assert replay(make_entries(), events) == statuses
        print("rebuilt service and pure replay both reproduce:")
        for rid, status in sorted(statuses.items()):
            print(f"  {rid}: {status}")
        print()

        ## export ships only approved records, as a normal annotation file ##
        out_path = Path(tmp) / "approved.jsonl"
        counts = rebuilt.export_approved(out_path, provenance={"session": "walkthrough"})
        exported, diagnostics = parse_dataset(out_path)
        print(f"exported per bucket: {counts}")
        print(f"export parses back cleanly: {[r.id for r in exported]}, "
              f"{len(diagnostics)} diagnostics")


if __name__ == "__main__":
    main()
