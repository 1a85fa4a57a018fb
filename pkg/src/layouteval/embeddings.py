"""Caption and image-crop embeddings: storage, lookup, and similarity.

Embeddings arrive either from a precomputed store file or from an
external embedding service over HTTP. This module owns the store format,
the fallback-and-cache lookup path, and cosine/CLIP-score arithmetic.
It never runs model inference itself.

Store file format (record-per-line, UTF-8):
    line 1 (optional): {"_provenance": {...}}
    header line:       {"model": "<name>", "dim": <int>}
    data lines:        {"key": "<text>", "b64": "<base64 little-endian float32>"}
"""

from __future__ import annotations

import base64
import json
import threading
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Sequence

import httpx
import numpy as np

from layouteval.jsonlio import PROVENANCE_KEY

DEFAULT_DIM = 512
DEFAULT_SCALE = 100.0

# normalization is skipped inside this tolerance so that loading an
# already-normalized store is bit-exact (renormalizing can flip low bits)
_NORM_SKIP_TOL = 1e-6


class EmbeddingUnavailable(LookupError):
    """Raised when a key misses the store and no fallback is configured."""


class EmbeddingServiceError(RuntimeError):
    """Raised when the embedding service fails or returns a bad payload."""


def normalize_key(key: str) -> str:
    """Canonical store key: exact text under Unicode NFC normalization."""
    if not key:
        raise ValueError("embedding key must be non-empty")
    return unicodedata.normalize("NFC", key)


@dataclass(frozen=True, eq=False)
class EmbeddingVector:
    """A unit-norm float32 vector plus the Euclidean norm it arrived with."""

    values: np.ndarray
    raw_norm: float

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])

    @staticmethod
    def from_raw(values: Sequence[float] | np.ndarray, key: str = "") -> "EmbeddingVector":
        """Validate and normalize raw floats into a unit vector.

        Zero or non-finite input is rejected; the key only decorates the
        error message. Vectors already unit-norm are kept bit-identical.
        """
        arr = np.asarray(values, dtype=np.float32)
        if arr.ndim != 1 or arr.shape[0] == 0:
            raise ValueError(f"embedding {key!r} must be a non-empty 1-D vector")
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"embedding {key!r} contains non-finite values")
        norm = float(np.linalg.norm(arr.astype(np.float64)))
        if norm == 0.0:
            raise ValueError(f"zero-norm embedding for key {key!r}")
        if abs(norm - 1.0) >= _NORM_SKIP_TOL:
            arr = (arr / np.float32(norm)).astype(np.float32)
        arr.flags.writeable = False
        return EmbeddingVector(values=arr, raw_norm=norm)

    def to_b64(self) -> str:
        return base64.b64encode(self.values.astype("<f4").tobytes()).decode("ascii")

    @staticmethod
    def from_b64(payload: str, key: str = "") -> "EmbeddingVector":
        raw = base64.b64decode(payload.encode("ascii"), validate=True)
        if len(raw) == 0 or len(raw) % 4 != 0:
            raise ValueError(f"embedding {key!r}: payload length {len(raw)} not a multiple of 4")
        arr = np.frombuffer(raw, dtype="<f4")
        return EmbeddingVector.from_raw(arr, key=key)


class EmbeddingStore:
    """Keyed collection of same-dimension unit vectors with a cache lock."""

    def __init__(self, model: str, dim: int = DEFAULT_DIM):
        if dim < 1:
            raise ValueError(f"dimension must be >= 1, got {dim}")
        self.model = model
        self.dim = dim
        self._vectors: dict[str, EmbeddingVector] = {}
        self._lock = threading.Lock()

    def __contains__(self, key: str) -> bool:
        return normalize_key(key) in self._vectors

    def __len__(self) -> int:
        return len(self._vectors)

    def keys(self) -> list[str]:
        return list(self._vectors)

    def add(self, key: str, vector: EmbeddingVector) -> None:
        """Insert a vector, enforcing dimension consistency and key uniqueness."""
        key = normalize_key(key)
        if vector.dim != self.dim:
            raise ValueError(
                f"dimension mismatch for key {key!r}: store has D={self.dim}, "
                f"vector has D={vector.dim}"
            )
        with self._lock:
            if key in self._vectors:
                raise ValueError(f"duplicate embedding key {key!r}")
            self._vectors[key] = vector

    def get(self, key: str) -> EmbeddingVector | None:
        return self._vectors.get(normalize_key(key))

    def _cache(self, key: str, vector: EmbeddingVector) -> EmbeddingVector:
        # concurrent duplicate fetches allowed; content is identical so
        # whichever lands first wins and is what everyone reads after
        key = normalize_key(key)
        with self._lock:
            existing = self._vectors.get(key)
            if existing is not None:
                return existing
            self._vectors[key] = vector
            return vector


def load_store(source: str | Path | IO) -> EmbeddingStore:
    """Read a store file; every vector comes out unit-norm and D-consistent."""
    if isinstance(source, (str, Path)):
        fh: IO = open(source, "r", encoding="utf-8")
        owned = True
    else:
        fh, owned = source, False
    try:
        header = None
        store: EmbeddingStore | None = None
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            obj = json.loads(line)
            if header is None and isinstance(obj, dict) and PROVENANCE_KEY in obj:
                continue
            if header is None:
                if not isinstance(obj, dict) or "model" not in obj or "dim" not in obj:
                    raise ValueError(
                        f"line {line_no}: expected store header with model and dim"
                    )
                header = obj
                store = EmbeddingStore(model=obj["model"], dim=int(obj["dim"]))
                continue
            if "key" not in obj or "b64" not in obj:
                raise ValueError(f"line {line_no}: store row needs key and b64 fields")
            key = obj["key"]
            vector = EmbeddingVector.from_b64(obj["b64"], key=key)
            assert store is not None
            store.add(key, vector)
        if store is None:
            raise ValueError("store file has no header line")
        return store
    finally:
        if owned:
            fh.close()


def save_store(
    store: EmbeddingStore,
    dest: str | Path | IO,
    provenance: dict | None = None,
) -> None:
    """Write a store file; loading it back is bit-exact on the float payloads."""
    if isinstance(dest, (str, Path)):
        fh: IO = open(dest, "w", encoding="utf-8")
        owned = True
    else:
        fh, owned = dest, False
    try:
        if provenance is not None:
            fh.write(json.dumps({PROVENANCE_KEY: provenance}, sort_keys=True) + "\n")
        fh.write(json.dumps({"model": store.model, "dim": store.dim}) + "\n")
        for key in store.keys():
            vec = store.get(key)
            assert vec is not None
            fh.write(json.dumps({"key": key, "b64": vec.to_b64()}) + "\n")
    finally:
        if owned:
            fh.close()


class EmbeddingServiceClient:
    """Minimal HTTP client for an external embedding service.

    POST {base_url}/embed with {"texts": [...]} and expect
    {"model": str, "dim": int, "embeddings": [[float, ...], ...]}.
    """

    def __init__(
        self,
        base_url: str,
        timeout: float = 10.0,
        retries: int = 2,
        transport: httpx.BaseTransport | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.retries = retries
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def close(self) -> None:
        self._client.close()

    def embed(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        if not texts:
            return []
        last_exc: Exception | None = None
        for _ in range(self.retries + 1):
            try:
                resp = self._client.post(
                    self.base_url + "/embed",
                    json={"texts": list(texts)},
                )
            except httpx.TransportError as exc:
                last_exc = exc
                continue
            if resp.status_code // 100 == 5:
                last_exc = EmbeddingServiceError(
                    f"embedding service returned status {resp.status_code}"
                )
                continue
            if resp.status_code // 100 != 2:
                raise EmbeddingServiceError(
                    f"embedding service returned status {resp.status_code}"
                )
            payload = resp.json()
            rows = payload.get("embeddings")
            if not isinstance(rows, list) or len(rows) != len(texts):
                raise EmbeddingServiceError(
                    f"embedding service returned {len(rows) if isinstance(rows, list) else 'no'} "
                    f"rows for {len(texts)} texts"
                )
            return [
                EmbeddingVector.from_raw(row, key=text) for text, row in zip(texts, rows)
            ]
        raise EmbeddingServiceError(f"embedding service unreachable: {last_exc}")


def get_embedding(
    store: EmbeddingStore,
    key: str,
    fallback: EmbeddingServiceClient | None = None,
) -> EmbeddingVector:
    """Look up a key, optionally fetching and caching on a miss.

    The cache insert is atomic per key; a concurrent duplicate fetch
    returns whichever identical vector landed first.
    """
    hit = store.get(key)
    if hit is not None:
        return hit
    if fallback is None:
        raise EmbeddingUnavailable(f"embedding unavailable: {key}")
    vector = fallback.embed([normalize_key(key)])[0]
    if vector.dim != store.dim:
        raise EmbeddingServiceError(
            f"service returned D={vector.dim} for key {key!r}, store has D={store.dim}"
        )
    return store._cache(key, vector)


def cosine(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Cosine similarity of two unit vectors, clamped to [-1, 1]."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    dot = float(np.dot(a.values.astype(np.float64), b.values.astype(np.float64)))
    return max(-1.0, min(1.0, dot))


def clip_score(
    image_emb: EmbeddingVector,
    text_emb: EmbeddingVector,
    scale: float = DEFAULT_SCALE,
    clamp_negative: bool = True,
) -> float:
    """Similarity score in [0, scale]: scale * max(cosine, 0) by default."""
    sim = cosine(image_emb, text_emb)
    if clamp_negative:
        sim = max(sim, 0.0)
    return scale * sim
