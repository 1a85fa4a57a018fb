"""Aggregation of per-record, per-seed metrics into benchmark tables.

A run is one seed's metric values over a split's records. Aggregation is
macro: each seed is reduced to its mean over records, then cells report
mean and population standard deviation across the seed scalars,
rendered as "mean±std" with two half-up decimals (ratio metrics are
shown as percentages). CSV output keeps full precision and round-trips
losslessly.
"""

from __future__ import annotations

import csv
import io
import math
import statistics
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from json import JSONDecodeError
from pathlib import Path
from typing import IO, Iterable, Literal, Mapping, Sequence

from layouteval.annotations import Diagnostic
from layouteval.jsonlio import iter_jsonl, write_jsonl

METRIC_NAMES = ("miou", "o_miou", "sr_e", "sr_r", "clip_global", "clip_local")

# metrics reported as percentages (x100); CLIP scores are already 0..100
PERCENT_METRICS = frozenset({"miou", "o_miou", "sr_e", "sr_r"})

DISPLAY_NAMES = {
    "miou": "mIoU",
    "o_miou": "O-mIoU",
    "sr_e": "SR_E",
    "sr_r": "SR_R",
    "clip_global": "CLIP_Global",
    "clip_local": "CLIP_Local",
}

_SPLIT_ORDER = {"simple": 0, "regular": 1, "complex": 2}


@dataclass(frozen=True)
class RunResult:
    """One seed's per-record metric values for one split."""

    seed: str
    split: str
    metrics: Mapping[str, Mapping[str, float]]

    def __post_init__(self) -> None:
        frozen: dict[str, dict[str, float]] = {}
        for name, values in self.metrics.items():
            if name not in METRIC_NAMES:
                raise ValueError(f"unknown metric {name!r}; expected one of {METRIC_NAMES}")
            frozen[name] = dict(values)
        object.__setattr__(self, "metrics", frozen)


@dataclass(frozen=True)
class AggregateCell:
    """Across-seed summary of one metric within one split."""

    metric: str
    mean: float
    std: float
    n_seeds: int

    def __post_init__(self) -> None:
        if self.n_seeds < 1:
            raise ValueError("a cell needs at least one seed")
        if self.n_seeds == 1 and self.std != 0.0:
            raise ValueError("std must be 0 for a single seed")


AggregateTable = dict[str, dict[str, AggregateCell]]


def aggregate(
    runs: Sequence[RunResult],
    std_mode: Literal["population", "sample"] = "population",
) -> AggregateTable:
    """Macro aggregation: seed scalar = mean over records, cells across seeds.

    Splits or metrics missing from every run of a split simply have no
    cell; they are never filled with zeros. With a single seed the std is
    0 under either mode.
    """
    if not runs:
        raise ValueError("need at least one run")
    seed_scalars: dict[str, dict[str, dict[str, float]]] = {}
    for run in runs:
        for metric, values in run.metrics.items():
            if not values:
                continue
            scalar = math.fsum(values.values()) / len(values)
            seed_scalars.setdefault(run.split, {}).setdefault(metric, {})[run.seed] = scalar
    table: AggregateTable = {}
    for split, metrics in seed_scalars.items():
        for metric, by_seed in metrics.items():
            scalars = [by_seed[seed] for seed in sorted(by_seed)]
            mean = math.fsum(scalars) / len(scalars)
            if len(scalars) == 1:
                std = 0.0
            elif std_mode == "population":
                std = statistics.pstdev(scalars)
            else:
                std = statistics.stdev(scalars)
            table.setdefault(split, {})[metric] = AggregateCell(
                metric=metric, mean=mean, std=std, n_seeds=len(scalars)
            )
    return table


def _split_sort_key(split: str) -> tuple[int, str]:
    return (_SPLIT_ORDER.get(split, len(_SPLIT_ORDER)), split)


def format_cell(cell: AggregateCell, percent: bool, decimals: int = 2) -> str:
    """Render "mean±std" with half-up rounding at the requested precision."""
    q = Decimal(1).scaleb(-decimals)
    mean = cell.mean * 100.0 if percent else cell.mean
    std = cell.std * 100.0 if percent else cell.std
    mean_s = str(Decimal(repr(mean)).quantize(q, rounding=ROUND_HALF_UP))
    std_s = str(Decimal(repr(std)).quantize(q, rounding=ROUND_HALF_UP))
    return f"{mean_s}±{std_s}"


def render(
    table: AggregateTable,
    fmt: Literal["text", "csv"] = "text",
    percent_metrics: frozenset[str] = PERCENT_METRICS,
    decimals: int = 2,
    na_columns: Sequence[str] = (),
) -> str:
    """Render the aggregate table; text for terminals, csv for files.

    Text columns follow the fixed metric order with "-" for absent
    cells. CSV rows carry full-precision floats and round-trip through
    parse_table_csv without loss. na_columns appends display-only
    columns (e.g. metrics this toolkit does not compute) rendered as
    "n/a" in every row; they never appear in csv output.
    """
    if not table:
        raise ValueError("table is empty")
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["split", "metric", "mean", "std", "n_seeds"])
        for split in sorted(table, key=_split_sort_key):
            for metric in METRIC_NAMES:
                cell = table[split].get(metric)
                if cell is None:
                    continue
                writer.writerow([split, metric, repr(cell.mean), repr(cell.std), cell.n_seeds])
        return buf.getvalue()
    if fmt != "text":
        raise ValueError(f"unknown render format {fmt!r}")
    header = ["split"] + [DISPLAY_NAMES[m] for m in METRIC_NAMES] + list(na_columns)
    rows = [header]
    for split in sorted(table, key=_split_sort_key):
        row = [split]
        for metric in METRIC_NAMES:
            cell = table[split].get(metric)
            row.append("-" if cell is None else format_cell(cell, metric in percent_metrics, decimals))
        row.extend("n/a" for _ in na_columns)
        rows.append(row)
    widths = [max(len(r[c]) for r in rows) for c in range(len(header))]
    lines = []
    for i, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(widths[c]) for c, cell in enumerate(row)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * widths[c] for c in range(len(header))))
    return "\n".join(lines) + "\n"


def parse_table_csv(text: str) -> AggregateTable:
    """Inverse of render(fmt="csv"); floats are restored exactly.

    Lines starting with "#" (provenance stamps) are ignored.
    """
    data = "\n".join(l for l in text.splitlines() if not l.startswith("#"))
    reader = csv.reader(io.StringIO(data))
    header = next(reader, None)
    if header != ["split", "metric", "mean", "std", "n_seeds"]:
        raise ValueError(f"unexpected csv header: {header}")
    table: AggregateTable = {}
    for row in reader:
        if not row:
            continue
        split, metric, mean, std, n_seeds = row
        table.setdefault(split, {})[metric] = AggregateCell(
            metric=metric, mean=float(mean), std=float(std), n_seeds=int(n_seeds)
        )
    return table


def write_metrics_file(
    dest: str | Path | IO,
    rows: Iterable[dict],
    provenance: dict | None = None,
) -> int:
    """Write per-record metric rows: {id, seed, split, metrics: {...}}."""
    return write_jsonl(dest, rows, provenance)


def load_run_results(source: str | Path | IO) -> tuple[list[RunResult], list[Diagnostic]]:
    """Group a per-record metrics file into RunResult objects.

    Lines look like {"id": ..., "seed": ..., "split": ..., "metrics":
    {"miou": 0.5, ...}}; metrics may omit names, and null values are
    treated as absent (for example o_miou on a record with no pairs).
    """
    grouped: dict[tuple[str, str], dict[str, dict[str, float]]] = {}
    diagnostics: list[Diagnostic] = []
    for line_no, obj in iter_jsonl(source):
        if isinstance(obj, JSONDecodeError):
            diagnostics.append(Diagnostic(line_no, None, f"invalid JSON: {obj.msg}"))
            continue
        try:
            seed, split, rid = str(obj["seed"]), obj["split"], obj["id"]
            metrics = obj["metrics"]
            bucket = grouped.setdefault((seed, split), {})
            for name, value in metrics.items():
                if name not in METRIC_NAMES:
                    raise ValueError(f"unknown metric {name!r}")
                if value is None:
                    continue
                per_record = bucket.setdefault(name, {})
                if rid in per_record:
                    raise ValueError(f"duplicate record {rid!r} for metric {name!r}")
                per_record[rid] = float(value)
        except (KeyError, TypeError, ValueError) as exc:
            diagnostics.append(Diagnostic(line_no, obj.get("id") if isinstance(obj, dict) else None, str(exc)))
    runs = [
        RunResult(seed=seed, split=split, metrics=metrics)
        for (seed, split), metrics in sorted(grouped.items())
    ]
    return runs, diagnostics
