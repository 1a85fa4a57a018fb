"""Record-per-line file helpers shared by every reader and writer.

All toolkit data files are UTF-8 text with one JSON object per line.
Writers may prepend a single provenance header line of the form
``{"_provenance": {...}}``; readers skip it transparently.
"""

from __future__ import annotations

import hashlib
import io
import json
import os
from pathlib import Path
from typing import Any, IO, Iterable, Iterator

PROVENANCE_KEY = "_provenance"


def _open_text(source: str | Path | IO) -> tuple[IO, bool]:
    """Return a text-mode file object and whether this function opened it."""
    if isinstance(source, (str, Path)):
        return open(source, "r", encoding="utf-8"), True
    if isinstance(source, io.TextIOBase):
        return source, False
    # binary stream: wrap without closing the underlying buffer
    return io.TextIOWrapper(source, encoding="utf-8"), False


def iter_jsonl(source: str | Path | IO) -> Iterator[tuple[int, Any]]:
    """Yield (line_number, parsed_object) for each non-blank line.

    A provenance header on the first line is skipped. Lines that fail to
    parse are yielded as (line_number, JSONDecodeError) so callers can
    turn them into diagnostics instead of losing the stream position.
    """
    fh, owned = _open_text(source)
    try:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                yield line_no, exc
                continue
            if line_no == 1 and isinstance(obj, dict) and PROVENANCE_KEY in obj:
                continue
            yield line_no, obj
    finally:
        if owned:
            fh.close()


def read_provenance(source: str | Path) -> dict | None:
    """Return the provenance header of a file, or None if absent."""
    with open(source, "r", encoding="utf-8") as fh:
        first = fh.readline().strip()
    if not first:
        return None
    try:
        obj = json.loads(first)
    except json.JSONDecodeError:
        return None
    if isinstance(obj, dict) and PROVENANCE_KEY in obj:
        return obj[PROVENANCE_KEY]
    return None


def write_jsonl(
    dest: str | Path | IO,
    rows: Iterable[Any],
    provenance: dict | None = None,
) -> int:
    """Write rows as JSONL, optionally preceded by a provenance header.

    Returns the number of data rows written (header excluded).
    """
    if isinstance(dest, (str, Path)):
        fh: IO = open(dest, "w", encoding="utf-8")
        owned = True
    else:
        fh, owned = dest, False
    count = 0
    try:
        if provenance is not None:
            fh.write(json.dumps({PROVENANCE_KEY: provenance}, sort_keys=True) + "\n")
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
            count += 1
    finally:
        if owned:
            fh.close()
    return count


def file_digest(path: str | Path) -> str:
    """SHA-256 hex digest of a file's bytes."""
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def make_provenance(
    version: str,
    config_hash: str,
    inputs: dict[str, str] | None = None,
) -> dict:
    """Provenance payload stamped onto every output file.

    inputs maps a logical input name to its file digest.
    """
    return {
        "toolkit_version": version,
        "config_hash": config_hash,
        "inputs": dict(sorted((inputs or {}).items())),
    }


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write text to path via a same-directory temp file and rename."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp." + str(os.getpid()))
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)
