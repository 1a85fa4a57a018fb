"""Operator commands tying ingestion, scoring, evaluation, and auditing together.

Subcommands: validate, score, eval, losses-check, report, audit-serve.
Settings come from an optional JSON config file overridden by flags
(flags win; the LAYOUTEVAL_EMBED_URL environment variable sits between
the two for the embedding service URL). Every output file starts with a
provenance line recording the toolkit version, a hash of the resolved
config, and digests of the input files, so results can be traced back
to exactly what produced them.

Exit codes: 0 success, 1 validation or metric failure, 2 I/O or config
error.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import os
import sys
from collections import Counter
from dataclasses import dataclass, fields
from importlib import resources
from json import JSONDecodeError
from pathlib import Path
from typing import Sequence

import numpy as np

import layouteval
from layouteval.annotations import (
    DEFAULT_AREA_MIN,
    DEFAULT_IOU_MIN,
    filter_benchmark_eligible,
    parse_dataset,
    serialize_dataset,
    valid_overlap_pairs,
)
from layouteval.audit import AuditService, build_app
from layouteval.embeddings import (
    DEFAULT_SCALE,
    EmbeddingServiceClient,
    EmbeddingServiceError,
    clip_score,
    get_embedding,
    load_store,
)
from layouteval.jsonlio import (
    atomic_write_text,
    file_digest,
    iter_jsonl,
    make_provenance,
    write_jsonl,
)
from layouteval.losses import AmodalMask, AttentionMap, finite_diff_check, parse_fixture
from layouteval.matching import (
    miou,
    o_miou,
    parse_detections,
    parse_judgments,
    success_rate,
)
from layouteval.reporting import aggregate, load_run_results, render, write_metrics_file
from layouteval.scoring import (
    DEFAULT_T_REGULAR_COMPLEX,
    DEFAULT_T_SIMPLE_REGULAR,
    DifficultyThresholds,
    bucket,
    overlay_score,
    score_distribution,
    scored_from_dict,
    scored_to_dict,
)

EMBED_URL_ENV = "LAYOUTEVAL_EMBED_URL"
GRADIENT_TOLERANCE = 1e-4

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


class ConfigError(Exception):
    """Bad configuration or unreadable input; maps to exit code 2."""


@dataclass(frozen=True)
class Config:
    """Resolved settings shared by every command.

    Path fields stay None until a command that needs them checks for
    them, so unrelated commands run with a partial config. seeds holds
    the labels of the generation runs to evaluate; detection, judgment,
    and image-embedding files are looked up per seed as <seed>.jsonl
    under their configured directories.
    """

    annotations: str | None = None
    embeddings: str | None = None
    detections: str | None = None
    judgments: str | None = None
    image_embeddings: str | None = None
    output_dir: str = "out"
    iou_min: float = DEFAULT_IOU_MIN
    area_min: float = DEFAULT_AREA_MIN
    t_simple_regular: float = DEFAULT_T_SIMPLE_REGULAR
    t_regular_complex: float = DEFAULT_T_REGULAR_COMPLEX
    embed_url: str | None = None
    embed_timeout: float = 10.0
    clip_scale: float = DEFAULT_SCALE
    seeds: tuple[str, ...] = ()
    std_mode: str = "population"

    def __post_init__(self) -> None:
        if self.std_mode not in ("population", "sample"):
            raise ValueError(f"std_mode must be population or sample, got {self.std_mode!r}")
        for name in ("iou_min", "area_min", "embed_timeout", "clip_scale"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be a nonnegative finite number, got {value!r}")
        self.thresholds()
        object.__setattr__(self, "seeds", tuple(str(s) for s in self.seeds))

    def thresholds(self) -> DifficultyThresholds:
        return DifficultyThresholds(self.t_simple_regular, self.t_regular_complex)

    def as_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["seeds"] = list(self.seeds)
        return out

    def digest(self) -> str:
        payload = json.dumps(self.as_dict(), sort_keys=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


_CONFIG_FIELDS = frozenset(f.name for f in fields(Config))


def load_config_file(path: str | Path) -> dict:
    """Read a JSON config file, rejecting keys the Config does not know."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    except JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}")
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    unknown = sorted(set(raw) - _CONFIG_FIELDS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return raw


def resolve_config(args: argparse.Namespace) -> Config:
    """Merge config file, environment, and flags; flags take precedence."""
    values: dict = {}
    if getattr(args, "config", None):
        values.update(load_config_file(args.config))
    env_url = os.environ.get(EMBED_URL_ENV)
    if env_url:
        values["embed_url"] = env_url
    for name in _CONFIG_FIELDS:
        override = getattr(args, name, None)
        if override is not None:
            values[name] = override
    try:
        return Config(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc))


def _require(value: str | None, name: str) -> Path:
    if not value:
        raise ConfigError(f"{name} path is required for this command")
    path = Path(value)
    if not path.exists():
        raise ConfigError(f"{name} path {path} does not exist")
    return path


def _provenance(config: Config, inputs: dict[str, Path]) -> dict:
    digests = {name: file_digest(path) for name, path in inputs.items()}
    return make_provenance(layouteval.__version__, config.digest(), digests)


def _warn(message: str) -> None:
    print(f"warning: {message}", file=sys.stderr)


def cmd_validate(config: Config, args: argparse.Namespace) -> int:
    """Parse the annotation file and stream every rejection diagnostic."""
    path = _require(config.annotations, "annotations")
    records, diagnostics = parse_dataset(path)
    for diag in diagnostics:
        print(str(diag), file=sys.stderr)
    status = EXIT_FAIL if diagnostics else EXIT_OK
    print(f"{len(records)} records parsed, {len(diagnostics)} rejected")
    if args.check_pairs:
        kept, rejected = filter_benchmark_eligible(records, config.iou_min, config.area_min)
        for record in rejected:
            n = len(valid_overlap_pairs(record, config.iou_min, config.area_min))
            print(f"record {record.id!r}: {n} valid pairs, need 1..10", file=sys.stderr)
        print(f"{len(kept)} of {len(records)} records benchmark-eligible")
        if rejected:
            status = EXIT_FAIL
    return status


def cmd_score(config: Config, args: argparse.Namespace) -> int:
    """Score and bucket every record; write scored + split-labeled files.

    Any record whose captions cannot be embedded aborts the command
    after listing every such record, and no output file is written.
    """
    ann_path = _require(config.annotations, "annotations")
    emb_path = _require(config.embeddings, "embeddings")
    records, diagnostics = parse_dataset(ann_path)
    if diagnostics:
        for diag in diagnostics:
            print(str(diag), file=sys.stderr)
        return EXIT_FAIL
    store = load_store(emb_path)
    fallback = None
    if config.embed_url:
        fallback = EmbeddingServiceClient(config.embed_url, timeout=config.embed_timeout)
    thresholds = config.thresholds()
    scored = []
    missing = []
    for record in records:
        try:
            result = overlay_score(
                record, store, fallback, clamp_negative_cos=args.clamp_negative
            )
        except LookupError as exc:
            missing.append(str(exc))
            continue
        scored.append((record, result, bucket(result.score, thresholds)))
    if missing:
        for line in missing:
            print(line, file=sys.stderr)
        print(f"{len(missing)} records missing embeddings; no output written", file=sys.stderr)
        return EXIT_FAIL

    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    provenance = _provenance(config, {"annotations": ann_path, "embeddings": emb_path})
    write_jsonl(out_dir / "scored.jsonl", (scored_to_dict(s, b) for _, s, b in scored), provenance)
    labeled = [dataclasses.replace(r, split=b.label) for r, _, b in scored]
    serialize_dataset(out_dir / "labeled.jsonl", labeled, provenance)

    hist, summary = score_distribution([s for _, s, _ in scored])
    print("difficulty score histogram (bin lower edge: count)")
    for edge, count in hist.items():
        print(f"  {edge:6.1f}: {count}")
    if summary is not None:
        print(
            f"scores: mean {summary.mean:.4f}, median {summary.median:.4f}, "
            f"max {summary.max:.4f}"
        )
    counts = Counter(b.label for _, _, b in scored)
    for label in ("simple", "regular", "complex"):
        print(f"  {label}: {counts.get(label, 0)}")
    print(f"wrote {out_dir / 'scored.jsonl'} and {out_dir / 'labeled.jsonl'}")
    return EXIT_OK


def _eval_seed_inputs(config: Config, seed: str, kind: str) -> Path | None:
    base = getattr(config, kind)
    if base is None:
        return None
    return Path(base) / f"{seed}.jsonl"


def cmd_eval(config: Config, args: argparse.Namespace) -> int:
    """Compute per-record metrics across seeds and render the aggregate table.

    Detections drive the spatial metrics; judgment files add success
    rates and per-seed image-embedding stores add the two clip scores.
    A seed without a detection file is skipped with a warning and flips
    the exit code to 1 so automation notices the gap.
    """
    ann_path = _require(config.annotations, "annotations")
    det_dir = _require(config.detections, "detections")
    if not config.seeds:
        raise ConfigError("eval needs at least one seed label (--seeds)")
    records, diagnostics = parse_dataset(ann_path)
    if diagnostics:
        for diag in diagnostics:
            print(str(diag), file=sys.stderr)
        return EXIT_FAIL
    unlabeled = [r.id for r in records if r.split is None]
    if unlabeled:
        _warn(
            f"{len(unlabeled)} records lack a split label and are skipped; "
            "run score to bucket them first"
        )
        records = [r for r in records if r.split is not None]
    if not records:
        print("no split-labeled records to evaluate", file=sys.stderr)
        return EXIT_FAIL
    records_by_id = {r.id: r for r in records}
    cap_store = load_store(_require(config.embeddings, "embeddings")) if config.image_embeddings else None

    inputs: dict[str, Path] = {"annotations": ann_path}
    rows: list[dict] = []
    seed_skipped = False
    for seed in config.seeds:
        det_path = det_dir / f"{seed}.jsonl"
        if not det_path.exists():
            _warn(f"seed {seed}: detection file {det_path} missing; seed skipped")
            seed_skipped = True
            continue
        inputs[f"detections/{seed}"] = det_path
        detections, det_diags = parse_detections(det_path)
        for diag in det_diags:
            print(str(diag), file=sys.stderr)
        by_record = {}
        for det in detections:
            if det.seed != seed:
                _warn(f"seed {seed}: row for {det.record_id!r} labeled seed {det.seed!r}; ignored")
            elif det.record_id not in records_by_id:
                _warn(f"seed {seed}: detections for unknown record {det.record_id!r}; ignored")
            elif det.record_id in by_record:
                _warn(f"seed {seed}: duplicate detections for {det.record_id!r}; ignored")
            else:
                by_record[det.record_id] = det

        sr_e = sr_r = None
        jud_path = _eval_seed_inputs(config, seed, "judgments")
        if jud_path is not None:
            if jud_path.exists():
                inputs[f"judgments/{seed}"] = jud_path
                judgments, jud_diags = parse_judgments(jud_path)
                judgments = [j for j in judgments if j.seed == seed]
                for diag in jud_diags:
                    print(str(diag), file=sys.stderr)
                sr_e = success_rate(judgments, records_by_id, "entity")
                sr_r = success_rate(judgments, records_by_id, "relationship")
                for diag in sr_e.diagnostics + sr_r.diagnostics:
                    print(str(diag), file=sys.stderr)
                if sr_e.total:
                    print(f"seed {seed}: pooled entity yes-rate {sr_e.yes}/{sr_e.total}")
                if sr_r.total:
                    print(f"seed {seed}: pooled relationship yes-rate {sr_r.yes}/{sr_r.total}")
            else:
                _warn(f"seed {seed}: judgment file {jud_path} missing; success rates skipped")

        img_store = None
        img_path = _eval_seed_inputs(config, seed, "image_embeddings")
        if img_path is not None:
            if img_path.exists():
                inputs[f"image_embeddings/{seed}"] = img_path
                img_store = load_store(img_path)
            else:
                _warn(f"seed {seed}: image embedding store {img_path} missing; clip scores skipped")

        no_detections = 0
        for record in records:
            metrics: dict[str, float] = {}
            det = by_record.get(record.id)
            if det is None:
                no_detections += 1
            else:
                metrics["miou"] = miou(record, det, scope=args.scope)
                region = o_miou(record, det, scope=args.scope)
                for diag in region.excluded:
                    print(str(diag), file=sys.stderr)
                if region.value is not None:
                    metrics["o_miou"] = region.value
            if sr_e is not None and record.id in sr_e.per_record:
                metrics["sr_e"] = sr_e.per_record[record.id]
            if sr_r is not None and record.id in sr_r.per_record:
                metrics["sr_r"] = sr_r.per_record[record.id]
            if img_store is not None and cap_store is not None:
                try:
                    global_clip = clip_score(
                        get_embedding(img_store, record.id),
                        get_embedding(cap_store, record.global_caption),
                        scale=config.clip_scale,
                    )
                    local_clips = [
                        clip_score(
                            get_embedding(img_store, f"{record.id}#{inst.name}"),
                            get_embedding(cap_store, inst.caption),
                            scale=config.clip_scale,
                        )
                        for inst in record.instances
                    ]
                except LookupError as exc:
                    _warn(f"seed {seed}: {exc}; clip scores skipped for {record.id!r}")
                else:
                    metrics["clip_global"] = global_clip
                    metrics["clip_local"] = math.fsum(local_clips) / len(local_clips)
            if metrics:
                rows.append(
                    {"id": record.id, "seed": seed, "split": record.split, "metrics": metrics}
                )
        if no_detections:
            _warn(f"seed {seed}: {no_detections} records without detections; spatial metrics absent")

    if not rows:
        print("no metrics computed", file=sys.stderr)
        return EXIT_FAIL
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    provenance = _provenance(config, inputs)
    metrics_path = out_dir / "metrics.jsonl"
    write_metrics_file(metrics_path, rows, provenance)

    runs, run_diags = load_run_results(metrics_path)
    for diag in run_diags:
        print(str(diag), file=sys.stderr)
    table = aggregate(runs, std_mode=config.std_mode)
    na = ("FID",) if args.include_fid else ()
    print(render(table, "text", na_columns=na), end="")
    csv_text = render(table, "csv")
    atomic_write_text(
        out_dir / "report.csv",
        f"# provenance: {json.dumps(provenance, sort_keys=True)}\n{csv_text}",
    )
    print(f"wrote {metrics_path} and {out_dir / 'report.csv'}")
    return EXIT_FAIL if seed_skipped else EXIT_OK


def cmd_losses_check(config: Config, args: argparse.Namespace) -> int:
    """Gradient-check the loss kernels; exit 0 iff every error is < 1e-4.

    With --trials the maps are randomized (token maps on an open
    positive range, pixel maps kept away from the log clamp); otherwise
    the packaged worked fixture is checked.
    """
    checks: list[tuple[str, float]] = []
    if args.trials:
        rng = np.random.default_rng(args.rng_seed)
        for trial in range(args.trials):
            h = int(rng.integers(4, 17))
            w = int(rng.integers(4, 17))
            n = int(rng.integers(1, 4))
            masks = [AmodalMask((rng.random((h, w)) < 0.5).astype(float)) for _ in range(n)]
            token_maps = [AttentionMap(rng.uniform(0.05, 2.0, (h, w))) for _ in range(n)]
            pixel_maps = [AttentionMap(rng.uniform(0.05, 0.95, (h, w))) for _ in range(n)]
            checks.append((f"trial {trial} token", finite_diff_check("token", token_maps, masks)))
            checks.append((f"trial {trial} pixel", finite_diff_check("pixel", pixel_maps, masks)))
    else:
        try:
            if args.fixture:
                maps, masks = parse_fixture(_require(args.fixture, "fixture"))
            else:
                packaged = resources.files("layouteval") / "fixtures" / "losses_worked.txt"
                with resources.as_file(packaged) as path:
                    maps, masks = parse_fixture(path)
        except ValueError as exc:
            raise ConfigError(f"fixture parse failed: {exc}")
        checks.append(("fixture token", finite_diff_check("token", maps, masks)))
        checks.append(("fixture pixel", finite_diff_check("pixel", maps, masks)))
    for name, err in checks:
        print(f"{name}: max relative error {err:.3e}")
    worst = max(err for _, err in checks)
    ok = worst < GRADIENT_TOLERANCE
    print(f"worst {worst:.3e} {'<' if ok else '>='} {GRADIENT_TOLERANCE:.0e}: {'ok' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_report(config: Config, args: argparse.Namespace) -> int:
    """Aggregate a per-record metrics file into the benchmark table."""
    metrics_path = (
        Path(args.metrics) if args.metrics else Path(config.output_dir) / "metrics.jsonl"
    )
    if not metrics_path.exists():
        raise ConfigError(f"metrics file {metrics_path} does not exist")
    runs, diagnostics = load_run_results(metrics_path)
    for diag in diagnostics:
        print(str(diag), file=sys.stderr)
    if not runs:
        print("metrics file holds no runs", file=sys.stderr)
        return EXIT_FAIL
    table = aggregate(runs, std_mode=config.std_mode)
    na = ("FID",) if args.include_fid else ()
    if args.format == "csv":
        provenance = _provenance(config, {"metrics": metrics_path})
        text = f"# provenance: {json.dumps(provenance, sort_keys=True)}\n" + render(table, "csv")
    else:
        text = render(table, "text", na_columns=na)
    if args.out:
        atomic_write_text(args.out, text)
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return EXIT_FAIL if diagnostics else EXIT_OK


def cmd_audit_serve(config: Config, args: argparse.Namespace) -> int:
    """Serve the audit backend (and UI, if a bundle directory is given)."""
    ann_path = _require(config.annotations, "annotations")
    scored_path = (
        Path(args.scored) if args.scored else Path(config.output_dir) / "scored.jsonl"
    )
    if not scored_path.exists():
        raise ConfigError(f"scored file {scored_path} does not exist (run score first)")
    records, diagnostics = parse_dataset(ann_path)
    if diagnostics:
        for diag in diagnostics:
            print(str(diag), file=sys.stderr)
        return EXIT_FAIL
    scores: dict[str, float] = {}
    for line_no, obj in iter_jsonl(scored_path):
        if isinstance(obj, JSONDecodeError):
            raise ConfigError(f"scored file line {line_no}: {obj.msg}")
        result, _ = scored_from_dict(obj)
        scores[result.record_id] = result.score
    unscored = [r.id for r in records if r.id not in scores]
    if unscored:
        raise ConfigError(
            f"{len(unscored)} records have no score row, e.g. {unscored[:3]}; run score first"
        )
    thresholds = config.thresholds()
    entries = [(r, scores[r.id], bucket(scores[r.id], thresholds)) for r in records]
    log_path = Path(args.log) if args.log else Path(config.output_dir) / "verdicts.log"
    log_path.parent.mkdir(parents=True, exist_ok=True)
    service = AuditService(entries, log_path)
    app = build_app(service, ui_dir=args.ui)

    import uvicorn

    print(f"serving {len(entries)} audit tasks on {args.host}:{args.port}")
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    except OSError as exc:
        raise ConfigError(f"cannot bind {args.host}:{args.port}: {exc}")
    return EXIT_OK


def _seed_list(text: str) -> tuple[str, ...]:
    return tuple(s.strip() for s in text.split(",") if s.strip())


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="FILE", help="JSON config file; flags override it")
    common.add_argument(
        "--print-config",
        action="store_true",
        help="print the resolved configuration as JSON and exit",
    )
    common.add_argument("--annotations", metavar="FILE", help="annotation records, one per line")
    common.add_argument("--embeddings", metavar="FILE", help="caption embedding store")
    common.add_argument("--detections", metavar="DIR", help="per-seed detection files")
    common.add_argument("--judgments", metavar="DIR", help="per-seed judgment files")
    common.add_argument(
        "--image-embeddings", metavar="DIR", help="per-seed image embedding stores"
    )
    common.add_argument("--output-dir", metavar="DIR", help="where output files land")
    common.add_argument("--iou-min", type=float, help="pair filter IoU threshold")
    common.add_argument("--area-min", type=float, help="pair filter intersection-area threshold")
    common.add_argument("--t-simple-regular", type=float, help="simple/regular score boundary")
    common.add_argument("--t-regular-complex", type=float, help="regular/complex score boundary")
    common.add_argument("--embed-url", help="embedding service base URL for cache misses")
    common.add_argument("--embed-timeout", type=float, help="embedding service timeout, seconds")
    common.add_argument("--clip-scale", type=float, help="clip score scale factor")
    common.add_argument(
        "--seeds", type=_seed_list, metavar="S1,S2,...", help="seed labels to evaluate"
    )
    common.add_argument(
        "--std", dest="std_mode", choices=("population", "sample"), help="std flavor across seeds"
    )

    parser = argparse.ArgumentParser(
        prog="layouteval", description="layout-to-image evaluation toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="check an annotation file")
    p.add_argument(
        "--check-pairs",
        action="store_true",
        help="also reject records outside the 1..10 valid-pair window",
    )
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("score", parents=[common], help="score and bucket records")
    p.add_argument(
        "--clamp-negative",
        action="store_true",
        help="clamp negative caption cosines to zero (sensitivity analysis)",
    )
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("eval", parents=[common], help="compute metrics across seeds")
    p.add_argument(
        "--scope",
        choices=("per_category", "global"),
        default="per_category",
        help="matching pool: within category name or across all boxes",
    )
    p.add_argument("--include-fid", action="store_true", help="render an n/a FID column")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("losses-check", parents=[common], help="gradient-check loss kernels")
    p.add_argument("--fixture", metavar="FILE", help="attention/mask fixture to check")
    p.add_argument("--trials", type=int, default=0, help="randomized trials instead of fixture")
    p.add_argument("--rng-seed", type=int, default=0, help="seed for randomized trials")
    p.set_defaults(func=cmd_losses_check)

    p = sub.add_parser("report", parents=[common], help="re-render a metrics file")
    p.add_argument("--metrics", metavar="FILE", help="metrics file (default: output dir)")
    p.add_argument("--format", choices=("text", "csv"), default="text")
    p.add_argument("--out", metavar="FILE", help="write here instead of stdout")
    p.add_argument("--include-fid", action="store_true", help="render an n/a FID column")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("audit-serve", parents=[common], help="run the audit backend")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8321)
    p.add_argument("--scored", metavar="FILE", help="scored file (default: output dir)")
    p.add_argument("--log", metavar="FILE", help="verdict log path (default: output dir)")
    p.add_argument("--ui", metavar="DIR", help="static UI bundle to serve at /")
    p.set_defaults(func=cmd_audit_serve)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = resolve_config(args)
        if args.print_config:
            print(json.dumps(config.as_dict(), indent=2, sort_keys=True))
            return EXIT_OK
        return args.func(config, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, EmbeddingServiceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
