"""Human-curation backend: audit tasks, verdict log, and approved export.

Each benchmark record becomes one audit task carrying the record
snapshot, its difficulty score and bucket, and an opaque image
reference. Auditors post yes/no verdicts against three fixed checks; a
task is approved when every check's latest verdict is yes and rejected
as soon as any is no. All verdicts live in an append-only event log that
is flushed to disk before a response is acknowledged, so replaying the
log from empty always reproduces the current state.
"""

from __future__ import annotations

import base64
import binascii
import json
import os
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Literal, Mapping, Sequence

from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from layouteval.annotations import LayoutRecord, record_to_dict, serialize_dataset
from layouteval.scoring import Bucket

DEFAULT_CHECKS = ("bbox_accuracy", "caption_alignment", "relationship_validity")

Status = Literal["pending", "approved", "rejected"]


@dataclass(frozen=True)
class VerdictEvent:
    """One logged verdict; seq is strictly increasing within a log."""

    seq: int
    record_id: str
    check: str
    verdict: bool
    auditor: str
    timestamp: float
    idempotency_key: str | None = None

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "record_id": self.record_id,
            "check": self.check,
            "verdict": self.verdict,
            "auditor": self.auditor,
            "timestamp": self.timestamp,
            "idempotency_key": self.idempotency_key,
        }

    @staticmethod
    def from_dict(obj: dict) -> "VerdictEvent":
        return VerdictEvent(
            seq=int(obj["seq"]),
            record_id=obj["record_id"],
            check=obj["check"],
            verdict=bool(obj["verdict"]),
            auditor=obj["auditor"],
            timestamp=float(obj["timestamp"]),
            idempotency_key=obj.get("idempotency_key"),
        )


def derive_status(verdicts: Mapping[str, bool | None], checks: Sequence[str]) -> Status:
    """approved iff every check is yes; rejected iff any is no; else pending."""
    values = [verdicts.get(check) for check in checks]
    if any(v is False for v in values):
        return "rejected"
    if all(v is True for v in values):
        return "approved"
    return "pending"


@dataclass(frozen=True)
class AuditTask:
    """Snapshot of one record under audit, with its current verdict state."""

    record: LayoutRecord
    score: float
    bucket: Bucket
    image_ref: str
    verdicts: Mapping[str, bool | None]
    status: Status

    def summary(self) -> dict:
        return {
            "id": self.record.id,
            "bucket": self.bucket.label,
            "score": self.score,
            "status": self.status,
            "n_instances": len(self.record.instances),
        }

    def to_dict(self) -> dict:
        return {
            **self.summary(),
            "image_ref": self.image_ref,
            "verdicts": dict(self.verdicts),
            "record": record_to_dict(self.record),
        }


def _encode_cursor(bucket: Bucket, record_id: str) -> str:
    raw = f"{int(bucket)}:{record_id}".encode("utf-8")
    return base64.urlsafe_b64encode(raw).decode("ascii")


def _decode_cursor(cursor: str) -> tuple[int, str]:
    try:
        raw = base64.urlsafe_b64decode(cursor.encode("ascii")).decode("utf-8")
        bucket_s, _, record_id = raw.partition(":")
        if not record_id:
            raise ValueError
        return int(bucket_s), record_id
    except (ValueError, binascii.Error, UnicodeDecodeError):
        raise ValueError(f"malformed cursor {cursor!r}") from None


class AuditService:
    """Materialized audit state over an append-only verdict log.

    The log file is the single source of truth: construction replays any
    existing log, and post_verdict appends (and fsyncs) before mutating
    in-memory state or responding.
    """

    def __init__(
        self,
        entries: Iterable[tuple[LayoutRecord, float, Bucket]],
        log_path: str | Path,
        checks: Sequence[str] = DEFAULT_CHECKS,
        image_ref_pattern: str = "images/{id}.png",
        clock: Callable[[], float] = time.time,
    ):
        self.checks = tuple(checks)
        if not self.checks:
            raise ValueError("need at least one check name")
        self.log_path = Path(log_path)
        self._clock = clock
        self._records: dict[str, LayoutRecord] = {}
        self._scores: dict[str, tuple[float, Bucket]] = {}
        self._image_refs: dict[str, str] = {}
        for record, score, bucket in entries:
            if record.id in self._records:
                raise ValueError(f"duplicate record id {record.id!r}")
            self._records[record.id] = record
            self._scores[record.id] = (score, bucket)
            self._image_refs[record.id] = image_ref_pattern.format(id=record.id)
        # record id -> check -> latest verdict
        self._verdicts: dict[str, dict[str, bool]] = {rid: {} for rid in self._records}
        self._dedup: dict[tuple[str, str, str, str], VerdictEvent] = {}
        self._seq = 0
        self._order = sorted(
            self._records, key=lambda rid: (int(self._scores[rid][1]), rid)
        )
        if self.log_path.exists():
            for event in read_event_log(self.log_path):
                self._apply(event)

    def _apply(self, event: VerdictEvent) -> None:
        if event.seq <= self._seq:
            raise ValueError(
                f"event seq {event.seq} not increasing (log already at {self._seq})"
            )
        if event.record_id not in self._records:
            raise ValueError(f"event references unknown record {event.record_id!r}")
        if event.check not in self.checks:
            raise ValueError(f"event references unknown check {event.check!r}")
        self._seq = event.seq
        self._verdicts[event.record_id][event.check] = event.verdict
        if event.idempotency_key is not None:
            key = (event.record_id, event.check, event.auditor, event.idempotency_key)
            self._dedup[key] = event

    def _task(self, record_id: str) -> AuditTask:
        record = self._records[record_id]
        score, bucket = self._scores[record_id]
        verdicts = {check: self._verdicts[record_id].get(check) for check in self.checks}
        return AuditTask(
            record=record,
            score=score,
            bucket=bucket,
            image_ref=self._image_refs[record_id],
            verdicts=verdicts,
            status=derive_status(verdicts, self.checks),
        )

    def list_tasks(
        self,
        status: Status | None = None,
        bucket: Bucket | None = None,
        cursor: str | None = None,
        page_size: int = 50,
    ) -> tuple[list[AuditTask], str | None]:
        """One page of tasks ordered by (bucket, id), plus the next cursor.

        The ordering keys are immutable, so pages are disjoint and
        jointly complete even while verdicts land concurrently. Filters
        apply before pagination. A malformed cursor raises ValueError.
        """
        if page_size < 1:
            raise ValueError(f"page_size must be >= 1, got {page_size}")
        start_after: tuple[int, str] | None = None
        if cursor is not None:
            start_after = _decode_cursor(cursor)
        page: list[AuditTask] = []
        next_cursor = None
        for rid in self._order:
            key = (int(self._scores[rid][1]), rid)
            if start_after is not None and key <= start_after:
                continue
            task = self._task(rid)
            if bucket is not None and task.bucket is not bucket:
                continue
            if status is not None and task.status != status:
                continue
            if len(page) == page_size:
                next_cursor = _encode_cursor(page[-1].bucket, page[-1].record.id)
                break
            page.append(task)
        return page, next_cursor

    def get_task(self, record_id: str) -> AuditTask:
        if record_id not in self._records:
            raise KeyError(record_id)
        return self._task(record_id)

    def post_verdict(
        self,
        record_id: str,
        check: str,
        verdict: bool,
        auditor: str,
        idempotency_key: str | None = None,
    ) -> tuple[VerdictEvent, AuditTask]:
        """Validate, append durably, then apply; returns (event, fresh task).

        A repeat of (record, check, auditor, idempotency_key) is answered
        with the original event and leaves the log untouched.
        """
        if record_id not in self._records:
            raise KeyError(record_id)
        if check not in self.checks:
            raise ValueError(f"unknown check {check!r}; expected one of {self.checks}")
        if not auditor or not auditor.strip():
            raise ValueError("auditor label must be non-empty")
        if idempotency_key is not None:
            existing = self._dedup.get((record_id, check, auditor, idempotency_key))
            if existing is not None:
                return existing, self._task(record_id)
        event = VerdictEvent(
            seq=self._seq + 1,
            record_id=record_id,
            check=check,
            verdict=verdict,
            auditor=auditor,
            timestamp=self._clock(),
            idempotency_key=idempotency_key,
        )
        self._append_durable(event)
        self._apply(event)
        return event, self._task(record_id)

    def _append_durable(self, event: VerdictEvent) -> None:
        self.log_path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.log_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event.to_dict(), sort_keys=True) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def statuses(self) -> dict[str, Status]:
        return {rid: self._task(rid).status for rid in self._records}

    def export_approved(
        self, destination: str | Path, provenance: dict | None = None
    ) -> dict[str, int]:
        """Write approved records as an annotation file; returns bucket counts.

        On a write failure the partial file is removed before the error
        propagates.
        """
        destination = Path(destination)
        approved = [
            rid for rid in self._order if self._task(rid).status == "approved"
        ]
        counts = {b.label: 0 for b in Bucket}
        for rid in approved:
            counts[self._scores[rid][1].label] += 1
        try:
            serialize_dataset(
                destination, (self._records[rid] for rid in approved), provenance
            )
        except OSError:
            if destination.exists():
                destination.unlink()
            raise
        return counts


def read_event_log(path: str | Path) -> list[VerdictEvent]:
    """Load every event from a verdict log, in file order."""
    events: list[VerdictEvent] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                events.append(VerdictEvent.from_dict(json.loads(line)))
    return events


def replay(
    entries: Iterable[tuple[LayoutRecord, float, Bucket]],
    events: Iterable[VerdictEvent],
    checks: Sequence[str] = DEFAULT_CHECKS,
) -> dict[str, Status]:
    """Pure fold of events into statuses, for replay-determinism checks."""
    verdicts: dict[str, dict[str, bool]] = {}
    ids = set()
    for record, _, _ in entries:
        verdicts[record.id] = {}
        ids.add(record.id)
    for event in events:
        if event.record_id not in ids or event.check not in checks:
            raise ValueError(f"event {event.seq} references unknown record or check")
        verdicts[event.record_id][event.check] = event.verdict
    return {rid: derive_status(v, checks) for rid, v in verdicts.items()}


def build_app(service: AuditService, ui_dir: str | Path | None = None) -> FastAPI:
    """FastAPI app exposing the audit endpoints plus optional static UI."""
    app = FastAPI(title="layout audit service", docs_url=None, redoc_url=None)

    @app.get("/tasks")
    def list_tasks(
        status: str | None = Query(default=None),
        bucket: str | None = Query(default=None),
        cursor: str | None = Query(default=None),
        page_size: int = Query(default=50, ge=1, le=500),
    ):
        if status is not None and status not in ("pending", "approved", "rejected"):
            raise HTTPException(status_code=400, detail=f"unknown status {status!r}")
        bucket_val = None
        if bucket is not None:
            try:
                bucket_val = Bucket.from_label(bucket)
            except KeyError:
                raise HTTPException(status_code=400, detail=f"unknown bucket {bucket!r}")
        try:
            page, next_cursor = service.list_tasks(
                status=status, bucket=bucket_val, cursor=cursor, page_size=page_size
            )
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {
            "tasks": [t.summary() for t in page],
            "next_cursor": next_cursor,
            "checks": list(service.checks),
        }

    @app.get("/tasks/{record_id}")
    def get_task(record_id: str):
        try:
            return service.get_task(record_id).to_dict()
        except KeyError:
            raise HTTPException(status_code=404, detail=f"no task {record_id!r}")

    @app.post("/tasks/{record_id}/verdicts")
    async def post_verdict(record_id: str, request: Request):
        try:
            body = await request.json()
        except json.JSONDecodeError:
            raise HTTPException(status_code=400, detail="body must be a JSON object")
        if not isinstance(body, dict):
            raise HTTPException(status_code=400, detail="body must be a JSON object")
        verdict = body.get("verdict")
        if isinstance(verdict, str) and verdict.strip().lower() in ("yes", "no"):
            verdict = verdict.strip().lower() == "yes"
        if not isinstance(verdict, bool):
            raise HTTPException(
                status_code=400, detail="verdict must be true/false or \"yes\"/\"no\""
            )
        try:
            event, task = service.post_verdict(
                record_id=record_id,
                check=body.get("check", ""),
                verdict=verdict,
                auditor=body.get("auditor", ""),
                idempotency_key=body.get("idempotency_key"),
            )
        except KeyError:
            raise HTTPException(status_code=404, detail=f"no task {record_id!r}")
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return JSONResponse(
            status_code=201, content={"event": event.to_dict(), "task": task.to_dict()}
        )

    @app.post("/export")
    async def export(request: Request):
        body = {}
        if await request.body():
            try:
                body = await request.json()
            except json.JSONDecodeError:
                raise HTTPException(status_code=400, detail="body must be a JSON object")
        destination = body.get("destination") or str(
            service.log_path.with_name("approved.jsonl")
        )
        try:
            counts = service.export_approved(destination)
        except OSError as exc:
            raise HTTPException(status_code=500, detail=f"export failed: {exc}")
        return {"destination": destination, "counts": counts}

    if ui_dir is not None:
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    return app
