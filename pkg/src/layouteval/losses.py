"""Numeric kernels for attention-to-mask alignment objectives.

Two alignment losses steer instance attention toward ground-truth masks:
a token-level loss (one minus the fraction of attention mass inside the
mask, averaged over instances) and a pixel-level binary cross-entropy.
Both come with analytic gradients plus a finite-difference checker, and
a small combiner assembles the full training objective from an opaque
base loss and the two alignment terms.

Everything here is desk-scale numerics on supplied arrays; no model,
sampler, or attention extraction is involved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Literal, Sequence

import numpy as np

DEFAULT_EPSILON = 1e-6

LossKind = Literal["token", "pixel"]


@dataclass(frozen=True, eq=False)
class AttentionMap:
    """A nonnegative H x W attention map with some strictly positive mass."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError(f"attention map must be 2-D and non-empty, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("attention map contains non-finite values")
        if np.any(arr < 0):
            raise ValueError("attention map values must be >= 0")
        if not np.any(arr > 0):
            raise ValueError("attention map must have at least one positive value")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True, eq=False)
class AmodalMask:
    """A strictly binary H x W mask; soft masks are rejected."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError(f"mask must be 2-D and non-empty, got shape {arr.shape}")
        if not np.all((arr == 0.0) | (arr == 1.0)):
            raise ValueError("mask values must be exactly 0 or 1")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class LossWeights:
    """Weights of the two alignment terms in the training objective.

    lam scales the token-level term, beta the pixel-level term. The
    default preset is lam=0.5, beta=1; the alternate preset used for the
    EliGen-style variant is lam=1, beta=1.
    """

    lam: float = 0.5
    beta: float = 1.0

    def __post_init__(self) -> None:
        for name in ("lam", "beta"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")

    @staticmethod
    def eligen_preset() -> "LossWeights":
        return LossWeights(lam=1.0, beta=1.0)


def _check_pairing(maps: Sequence[AttentionMap], masks: Sequence[AmodalMask]) -> None:
    if len(maps) == 0:
        raise ValueError("need at least one attention map")
    if len(maps) != len(masks):
        raise ValueError(f"got {len(maps)} maps but {len(masks)} masks")
    for k, (a, m) in enumerate(zip(maps, masks)):
        if a.values.shape != m.values.shape:
            raise ValueError(
                f"instance {k}: map shape {a.values.shape} != mask shape {m.values.shape}"
            )


def token_loss(maps: Sequence[AttentionMap], masks: Sequence[AmodalMask]) -> float:
    """Mean over instances of (1 - attention mass inside mask / total mass).

    0 when every instance's attention lies entirely inside its mask,
    1 when entirely outside. Scale-invariant per instance: rescaling one
    map by any positive factor cancels in the ratio.
    """
    _check_pairing(maps, masks)
    terms = []
    for a, m in zip(maps, masks):
        total = float(np.sum(a.values))
        inside = float(np.sum(a.values * m.values))
        terms.append(1.0 - inside / total)
    return math.fsum(terms) / len(terms)


def token_loss_grad(
    maps: Sequence[AttentionMap], masks: Sequence[AmodalMask]
) -> list[np.ndarray]:
    """Analytic gradient of token_loss w.r.t. every attention value.

    For instance i with inside mass S and total mass T, the derivative at
    pixel u is (S - m_u * T) / T^2, divided by the instance count.
    """
    _check_pairing(maps, masks)
    n = len(maps)
    grads = []
    for a, m in zip(maps, masks):
        total = float(np.sum(a.values))
        inside = float(np.sum(a.values * m.values))
        grads.append((inside - m.values * total) / (total * total) / n)
    return grads


def pixel_loss(
    amap: AttentionMap, mask: AmodalMask, epsilon: float = DEFAULT_EPSILON
) -> float:
    """Mean binary cross-entropy between attention values and the mask.

    Expects values already normalized into [0, 1] (see
    normalize_attention); each value is clamped to [epsilon, 1 - epsilon]
    before the log terms.
    """
    if amap.values.shape != mask.values.shape:
        raise ValueError(
            f"map shape {amap.values.shape} != mask shape {mask.values.shape}"
        )
    if not 0 < epsilon < 0.5:
        raise ValueError(f"epsilon must be in (0, 0.5), got {epsilon}")
    if np.any(amap.values > 1.0):
        raise ValueError("pixel loss needs values in [0, 1]; normalize the map first")
    a = np.clip(amap.values, epsilon, 1.0 - epsilon)
    m = mask.values
    ce = -(m * np.log(a) + (1.0 - m) * np.log(1.0 - a))
    return float(np.mean(ce))


def pixel_loss_grad(
    amap: AttentionMap, mask: AmodalMask, epsilon: float = DEFAULT_EPSILON
) -> np.ndarray:
    """Analytic gradient of pixel_loss w.r.t. each attention value.

    Inside the clamp interval the derivative of the mean cross-entropy is
    (-m/a + (1-m)/(1-a)) / (H*W); at clamped values it is 0.
    """
    a = amap.values
    m = mask.values
    clamped = np.clip(a, epsilon, 1.0 - epsilon)
    grad = (-m / clamped + (1.0 - m) / (1.0 - clamped)) / a.size
    grad = np.where((a > epsilon) & (a < 1.0 - epsilon), grad, 0.0)
    return grad


def normalize_attention(
    amap: AttentionMap, method: Literal["max", "softmax"] = "max"
) -> AttentionMap:
    """Map raw nonnegative attention into [0, 1].

    "max" divides by the map's maximum (the default; preserves zeros),
    "softmax" exponentiates and normalizes over all pixels.
    """
    v = amap.values
    if method == "max":
        return AttentionMap(v / float(np.max(v)))
    if method == "softmax":
        shifted = np.exp(v - float(np.max(v)))
        return AttentionMap(shifted / float(np.sum(shifted)))
    raise ValueError(f"unknown normalization method {method!r}")


def combine_losses(ldm: float, token: float, pixel: float, weights: LossWeights) -> float:
    """Assemble the training objective from its three scalar components."""
    return ldm + weights.lam * token + weights.beta * pixel


@dataclass(frozen=True)
class TotalLoss:
    """The combined objective and the components it was assembled from."""

    total: float
    ldm: float
    token: float
    pixel: float


def total_loss(
    ldm: float,
    maps: Sequence[AttentionMap],
    masks: Sequence[AmodalMask],
    weights: LossWeights | None = None,
    epsilon: float = DEFAULT_EPSILON,
    normalization: Literal["max", "softmax"] = "max",
) -> TotalLoss:
    """Full objective: base loss + lam * token term + beta * pixel term.

    The pixel term is the mean over instances of the per-instance pixel
    loss, computed on max-normalized maps; the token term sees the raw
    maps (it is scale-invariant). The base loss is an opaque scalar
    supplied by the caller.
    """
    weights = weights or LossWeights()
    token = token_loss(maps, masks)
    pixel_terms = [
        pixel_loss(normalize_attention(a, normalization), m, epsilon=epsilon)
        for a, m in zip(maps, masks)
    ]
    pixel = math.fsum(pixel_terms) / len(pixel_terms)
    return TotalLoss(
        total=combine_losses(ldm, token, pixel, weights),
        ldm=ldm,
        token=token,
        pixel=pixel,
    )


def eligen_average_attention(token_maps: Sequence[AttentionMap]) -> AttentionMap:
    """Elementwise mean of one instance's per-token attention maps."""
    if not token_maps:
        raise ValueError("need at least one attention map to average")
    shape = token_maps[0].values.shape
    for k, m in enumerate(token_maps):
        if m.values.shape != shape:
            raise ValueError(f"map {k} has shape {m.values.shape}, expected {shape}")
    stacked = np.stack([m.values for m in token_maps])
    return AttentionMap(np.mean(stacked, axis=0))


def finite_diff_check(
    loss: LossKind,
    maps: Sequence[AttentionMap],
    masks: Sequence[AmodalMask],
    eps: float = 1e-4,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Every coordinate of every map is perturbed by +/- eps; the relative
    error at a coordinate is |analytic - central| / (|central| + 1e-8).
    For the pixel kernel the supplied values must lie in (0, 1) and stay
    away from the clamp boundaries by more than eps.
    """
    _check_pairing(maps, masks)

    def evaluate(all_values: list[np.ndarray]) -> float:
        if loss == "token":
            return token_loss([AttentionMap(v) for v in all_values], masks)
        terms = [
            pixel_loss(AttentionMap(v), m) for v, m in zip(all_values, masks)
        ]
        return math.fsum(terms) / len(terms)

    if loss == "token":
        analytic = token_loss_grad(maps, masks)
    elif loss == "pixel":
        analytic = [
            pixel_loss_grad(a, m) / len(maps) for a, m in zip(maps, masks)
        ]
    else:
        raise ValueError(f"unknown loss kind {loss!r}")

    base = [a.values.copy() for a in maps]
    worst = 0.0
    for k in range(len(base)):
        h, w = base[k].shape
        for r in range(h):
            for c in range(w):
                plus = [v.copy() for v in base]
                minus = [v.copy() for v in base]
                plus[k][r, c] += eps
                minus[k][r, c] -= eps
                central = (evaluate(plus) - evaluate(minus)) / (2.0 * eps)
                rel = abs(float(analytic[k][r, c]) - central) / (abs(central) + 1e-8)
                worst = max(worst, rel)
    return worst


def parse_fixture(source: str | Path | IO) -> tuple[list[AttentionMap], list[AmodalMask]]:
    """Read a map/mask fixture: "H W N" header, then per instance H rows
    of W floats (the map) followed by H rows of W bits (the mask).

    Blank lines and lines starting with # are ignored.
    """
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source.read()
    lines = [
        line.strip()
        for line in text.splitlines()
        if line.strip() and not line.strip().startswith("#")
    ]
    if not lines:
        raise ValueError("empty fixture")
    header = lines[0].split()
    if len(header) != 3:
        raise ValueError(f"fixture header must be 'H W N', got {lines[0]!r}")
    h, w, n = (int(x) for x in header)
    expected = 1 + n * 2 * h
    if len(lines) != expected:
        raise ValueError(f"fixture has {len(lines)} lines, expected {expected}")
    maps: list[AttentionMap] = []
    masks: list[AmodalMask] = []
    cursor = 1
    for _ in range(n):
        rows = [[float(x) for x in lines[cursor + r].split()] for r in range(h)]
        cursor += h
        bits = [[float(x) for x in lines[cursor + r].split()] for r in range(h)]
        cursor += h
        for row in rows + bits:
            if len(row) != w:
                raise ValueError(f"fixture row has {len(row)} values, expected {w}")
        maps.append(AttentionMap(np.array(rows)))
        masks.append(AmodalMask(np.array(bits)))
    return maps, masks


def write_fixture(
    dest: str | Path | IO,
    maps: Sequence[AttentionMap],
    masks: Sequence[AmodalMask],
) -> None:
    """Write maps and masks in the fixture format parse_fixture reads."""
    _check_pairing(maps, masks)
    h, w = maps[0].values.shape
    out = [f"{h} {w} {len(maps)}"]
    for a, m in zip(maps, masks):
        if a.values.shape != (h, w):
            raise ValueError("all fixture instances must share one shape")
        for row in a.values:
            out.append(" ".join(repr(float(x)) for x in row))
        for row in m.values:
            out.append(" ".join(str(int(x)) for x in row))
    text = "\n".join(out) + "\n"
    if isinstance(dest, (str, Path)):
        Path(dest).write_text(text, encoding="utf-8")
    else:
        dest.write(text)
