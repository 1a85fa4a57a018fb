"""End-to-end command tests: validate, score, eval, losses-check, report."""

import json
import math

import pytest

from layouteval.annotations import parse_dataset, serialize_dataset
from layouteval.cli import EMBED_URL_ENV, main
from layouteval.embeddings import EmbeddingStore, load_store, save_store
from layouteval.geometry import BBox, intersect, iou
from layouteval.jsonlio import read_provenance, write_jsonl
from layouteval.reporting import (
    RunResult,
    aggregate,
    parse_table_csv,
    render,
)
from layouteval.scoring import scored_from_dict

from conftest import caption_store, mk_inst, mk_record, seeded_unit


@pytest.fixture(autouse=True)
def _no_embed_env(monkeypatch):
    monkeypatch.delenv(EMBED_URL_ENV, raising=False)


def overlapping_records(n=3, split=None):
    """Records whose two instances overlap and are related."""
    records = []
    for k in range(n):
        records.append(
            mk_record(
                f"rec_{k:03d}",
                [
                    mk_inst("crate_1", (0.1, 0.1, 0.5, 0.5), caption=f"a crate {k}"),
                    mk_inst("lamp_1", (0.3, 0.3, 0.7, 0.7), caption=f"a lamp {k}"),
                ],
                rels=[("crate_1", "lamp_1", "a lamp on a crate")],
                split=split,
            )
        )
    return records


def write_workspace(tmp_path, records):
    """Annotation file + caption store laid out the way the commands expect."""
    ann = tmp_path / "annotations.jsonl"
    serialize_dataset(ann, records)
    emb = tmp_path / "captions.jsonl"
    save_store(caption_store(records), emb)
    return ann, emb


def perfect_detections(records, seed):
    """Detection rows that echo the ground-truth boxes exactly."""
    rows = []
    for r in records:
        categories = {}
        for inst in r.instances:
            category = inst.name.rsplit("_", 1)[0]
            categories.setdefault(category, []).append(
                [inst.bbox.x1, inst.bbox.y1, inst.bbox.x2, inst.bbox.y2]
            )
        rows.append({"id": r.id, "seed": seed, "categories": categories})
    return rows


def all_yes_judgments(records, seed):
    rows = []
    for r in records:
        rows.append(
            {
                "id": r.id,
                "seed": seed,
                "entities": {inst.name: "Yes" for inst in r.instances},
                "relationships": [
                    {"subject": rel.subject, "object": rel.object, "verdict": "Yes"}
                    for rel in r.relationships
                ],
            }
        )
    return rows


def echo_image_store(records, dim=8):
    """Image embeddings identical to the caption embeddings (clip score 100)."""
    store = EmbeddingStore(model="seeded-test", dim=dim)
    for r in records:
        store.add(r.id, seeded_unit(r.global_caption, dim=dim))
        for inst in r.instances:
            store.add(f"{r.id}#{inst.name}", seeded_unit(inst.caption, dim=dim))
    return store


class TestValidate:
    def test_clean_file_exit_zero(self, tmp_path, capsys):
        ann, _ = write_workspace(tmp_path, overlapping_records())
        assert main(["validate", "--annotations", str(ann)]) == 0
        assert "3 records parsed, 0 rejected" in capsys.readouterr().out

    def test_one_bad_record_exit_one(self, tmp_path, capsys):
        ann, _ = write_workspace(tmp_path, overlapping_records())
        with open(ann, "a") as fh:
            fh.write(json.dumps({"id": "bad", "caption": "x"}) + "\n")
        assert main(["validate", "--annotations", str(ann)]) == 1
        err = capsys.readouterr().err
        assert err.count("\n") == 1 and "bad" in err

    def test_missing_file_exit_two(self, tmp_path, capsys):
        assert main(["validate", "--annotations", str(tmp_path / "nope.jsonl")]) == 2
        assert "does not exist" in capsys.readouterr().err

    def test_check_pairs_flags_ineligible(self, tmp_path, capsys):
        records = overlapping_records() + [
            mk_record(
                "rec_far",
                [
                    mk_inst("a_1", (0.0, 0.0, 0.2, 0.2)),
                    mk_inst("b_1", (0.8, 0.8, 1.0, 1.0)),
                ],
            )
        ]
        ann, _ = write_workspace(tmp_path, records)
        assert main(["validate", "--annotations", str(ann), "--check-pairs"]) == 1
        out = capsys.readouterr()
        assert "3 of 4 records benchmark-eligible" in out.out
        assert "rec_far" in out.err


class TestPrintConfig:
    def test_resolution_order(self, tmp_path, capsys, monkeypatch):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"embed_url": "http://file", "clip_scale": 50.0}))
        monkeypatch.setenv(EMBED_URL_ENV, "http://env")
        assert (
            main(
                [
                    "validate",
                    "--config",
                    str(cfg),
                    "--clip-scale",
                    "25.0",
                    "--print-config",
                ]
            )
            == 0
        )
        resolved = json.loads(capsys.readouterr().out)
        assert resolved["embed_url"] == "http://env"  # env beats file
        assert resolved["clip_scale"] == 25.0  # flag beats file

    def test_flag_beats_env(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv(EMBED_URL_ENV, "http://env")
        main(["validate", "--embed-url", "http://flag", "--print-config"])
        assert json.loads(capsys.readouterr().out)["embed_url"] == "http://flag"

    def test_unknown_config_key_exit_two(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"embed_urll": "typo"}))
        assert main(["validate", "--config", str(cfg), "--print-config"]) == 2
        assert "unknown config keys" in capsys.readouterr().err

    def test_bad_threshold_exit_two(self, capsys):
        assert main(["validate", "--t-simple-regular", "0.9", "--print-config"]) == 2


class TestScore:
    def test_scores_buckets_and_outputs(self, tmp_path, capsys):
        records = overlapping_records()
        ann, emb = write_workspace(tmp_path, records)
        out = tmp_path / "out"
        code = main(
            [
                "score",
                "--annotations",
                str(ann),
                "--embeddings",
                str(emb),
                "--output-dir",
                str(out),
            ]
        )
        assert code == 0
        # scored rows carry provenance and parse back
        scored_path = out / "scored.jsonl"
        prov = read_provenance(scored_path)
        assert prov["toolkit_version"] and prov["inputs"]["annotations"]
        labeled, diags = parse_dataset(out / "labeled.jsonl")
        assert diags == [] and all(r.split in ("simple", "regular", "complex") for r in labeled)
        assert "difficulty score histogram" in capsys.readouterr().out

    def test_missing_embedding_suppresses_output(self, tmp_path, capsys):
        records = overlapping_records()
        ann, _ = write_workspace(tmp_path, records)
        emb = tmp_path / "partial.jsonl"
        save_store(caption_store(records[:1]), emb)  # drop later captions
        out = tmp_path / "out"
        code = main(
            ["score", "--annotations", str(ann), "--embeddings", str(emb), "--output-dir", str(out)]
        )
        assert code == 1
        err = capsys.readouterr().err
        assert "rec_001" in err and "rec_002" in err
        assert not (out / "scored.jsonl").exists()

    def test_score_matches_library_path(self, tmp_path):
        from layouteval.scoring import overlay_score

        records = overlapping_records()
        ann, emb = write_workspace(tmp_path, records)
        out = tmp_path / "out"
        main(["score", "--annotations", str(ann), "--embeddings", str(emb), "--output-dir", str(out)])
        store = load_store(emb)
        by_id = {}
        for line in (out / "scored.jsonl").read_text().splitlines()[1:]:
            scored, _ = scored_from_dict(json.loads(line))
            by_id[scored.record_id] = scored.score
        for r in records:
            assert by_id[r.id] == overlay_score(r, store).score


def run_eval(tmp_path, records, seeds, with_judgments=True, with_images=True, extra=()):
    """Lay out a full eval workspace and run the command."""
    ann, emb = write_workspace(tmp_path, records)
    det_dir = tmp_path / "det"
    det_dir.mkdir(exist_ok=True)
    jud_dir = tmp_path / "jud"
    img_dir = tmp_path / "img"
    for seed in seeds:
        write_jsonl(det_dir / f"{seed}.jsonl", perfect_detections(records, seed))
        if with_judgments:
            jud_dir.mkdir(exist_ok=True)
            write_jsonl(jud_dir / f"{seed}.jsonl", all_yes_judgments(records, seed))
        if with_images:
            img_dir.mkdir(exist_ok=True)
            save_store(echo_image_store(records), img_dir / f"{seed}.jsonl")
    out = tmp_path / "out"
    argv = [
        "eval",
        "--annotations",
        str(ann),
        "--embeddings",
        str(emb),
        "--detections",
        str(det_dir),
        "--output-dir",
        str(out),
        "--seeds",
        ",".join(seeds),
    ]
    if with_judgments:
        argv += ["--judgments", str(jud_dir)]
    if with_images:
        argv += ["--image-embeddings", str(img_dir)]
    return main(argv + list(extra)), out


class TestEvalCeilingFloor:
    def test_perfect_run_hits_ceiling(self, tmp_path, capsys):
        records = overlapping_records(n=3, split="simple")
        code, out = run_eval(tmp_path, records, seeds=["s1"])
        assert code == 0
        table_line = next(
            l for l in capsys.readouterr().out.splitlines() if l.startswith("simple")
        )
        cells = table_line.split()
        # mIoU, O-mIoU, SR_E, SR_R and both clip columns all at ceiling
        assert cells[1:7] == ["100.00±0.00"] * 6

    def test_empty_detections_hit_floor(self, tmp_path, capsys):
        records = overlapping_records(n=2, split="simple")
        ann, emb = write_workspace(tmp_path, records)
        det_dir = tmp_path / "det"
        det_dir.mkdir()
        write_jsonl(
            det_dir / "s1.jsonl",
            [{"id": r.id, "seed": "s1", "categories": {}} for r in records],
        )
        code = main(
            [
                "eval",
                "--annotations",
                str(ann),
                "--detections",
                str(det_dir),
                "--output-dir",
                str(tmp_path / "out"),
                "--seeds",
                "s1",
            ]
        )
        assert code == 0
        table_line = next(
            l for l in capsys.readouterr().out.splitlines() if l.startswith("simple")
        )
        cells = table_line.split()
        assert cells[1] == "0.00±0.00" and cells[2] == "0.00±0.00"

    def test_missing_seed_sets_exit_flag(self, tmp_path, capsys):
        records = overlapping_records(n=2, split="simple")
        code, out = run_eval(
            tmp_path, records, seeds=["s1"], with_judgments=False, with_images=False
        )
        assert code == 0
        ann = tmp_path / "annotations.jsonl"
        code = main(
            [
                "eval",
                "--annotations",
                str(ann),
                "--detections",
                str(tmp_path / "det"),
                "--output-dir",
                str(out),
                "--seeds",
                "s1,ghost",
            ]
        )
        assert code == 1
        assert "seed ghost" in capsys.readouterr().err

    def test_unlabeled_records_skipped(self, tmp_path, capsys):
        records = overlapping_records(n=2, split=None)
        code, _ = run_eval(
            tmp_path, records, seeds=["s1"], with_judgments=False, with_images=False
        )
        assert code == 1
        assert "lack a split label" in capsys.readouterr().err


def graded_detections(records, seed, height):
    """One shrunken prediction per instance: IoU = 2 * height exactly-ish.

    Ground truth boxes span 0.4 on each side; a prediction covering the
    full width but only `height` of the vertical extent has
    IoU = (0.4 * height) / (0.4 * 0.4).
    """
    rows = []
    for r in records:
        categories = {}
        for inst in r.instances:
            category = inst.name.rsplit("_", 1)[0]
            b = inst.bbox
            categories.setdefault(category, []).append([b.x1, b.y1, b.x2, b.y1 + height])
        rows.append({"id": r.id, "seed": seed, "categories": categories})
    return rows


class TestEvalThreeSeedGolden:
    """The CLI table must equal the same numbers pushed through reporting."""

    HEIGHTS = {"s1": 0.24, "s2": 0.248, "s3": 0.244}

    def test_table_matches_hand_aggregation(self, tmp_path, capsys):
        records = overlapping_records(n=2, split="simple")
        ann, emb = write_workspace(tmp_path, records)
        det_dir = tmp_path / "det"
        det_dir.mkdir()
        for seed, height in self.HEIGHTS.items():
            write_jsonl(det_dir / f"{seed}.jsonl", graded_detections(records, seed, height))
        out = tmp_path / "out"
        code = main(
            [
                "eval",
                "--annotations",
                str(ann),
                "--detections",
                str(det_dir),
                "--output-dir",
                str(out),
                "--seeds",
                "s1,s2,s3",
            ]
        )
        assert code == 0

        # independent route: geometry for each IoU, reporting for the table
        runs = []
        for seed, height in self.HEIGHTS.items():
            per_record = {}
            o_per_record = {}
            for r in records:
                ious = [
                    iou(i.bbox, BBox(i.bbox.x1, i.bbox.y1, i.bbox.x2, i.bbox.y1 + height))
                    for i in r.instances
                ]
                per_record[r.id] = math.fsum(ious) / len(ious)
                gt_region = intersect(r.instances[0].bbox, r.instances[1].bbox)
                pred_region = intersect(
                    BBox(
                        r.instances[0].bbox.x1,
                        r.instances[0].bbox.y1,
                        r.instances[0].bbox.x2,
                        r.instances[0].bbox.y1 + height,
                    ),
                    BBox(
                        r.instances[1].bbox.x1,
                        r.instances[1].bbox.y1,
                        r.instances[1].bbox.x2,
                        r.instances[1].bbox.y1 + height,
                    ),
                )
                value = 0.0 if pred_region is None else iou(gt_region, pred_region)
                o_per_record[r.id] = value
            runs.append(
                RunResult(
                    seed=seed,
                    split="simple",
                    metrics={"miou": per_record, "o_miou": o_per_record},
                )
            )
        expected = aggregate(runs)
        expected_text = render(expected, "text")
        stdout = capsys.readouterr().out
        assert expected_text.splitlines()[2] in stdout

        csv_body = (out / "report.csv").read_text()
        assert parse_table_csv(csv_body) == expected

    def test_report_rerenders_metrics_file(self, tmp_path, capsys):
        records = overlapping_records(n=2, split="simple")
        code, out = run_eval(tmp_path, records, seeds=["s1", "s2"])
        assert code == 0
        capsys.readouterr()
        assert main(["report", "--metrics", str(out / "metrics.jsonl")]) == 0
        text = capsys.readouterr().out
        assert text.splitlines()[0].split()[0] == "split"
        assert "100.00±0.00" in text

    def test_report_include_fid_renders_na(self, tmp_path, capsys):
        records = overlapping_records(n=2, split="simple")
        _, out = run_eval(tmp_path, records, seeds=["s1"])
        capsys.readouterr()
        main(["report", "--metrics", str(out / "metrics.jsonl"), "--include-fid"])
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].split()[-1] == "FID"
        assert lines[2].split()[-1] == "n/a"

    def test_report_missing_metrics_exit_two(self, tmp_path):
        assert main(["report", "--metrics", str(tmp_path / "none.jsonl")]) == 2


class TestLossesCheck:
    def test_packaged_fixture_passes(self, capsys):
        assert main(["losses-check"]) == 0
        out = capsys.readouterr().out
        assert "fixture token" in out and "fixture pixel" in out and ": ok" in out

    def test_random_trials_pass(self, capsys):
        assert main(["losses-check", "--trials", "2", "--rng-seed", "7"]) == 0
        assert "trial 1 pixel" in capsys.readouterr().out

    def test_bad_fixture_exit_two(self, tmp_path):
        bad = tmp_path / "bad.txt"
        bad.write_text("not a fixture\n")
        assert main(["losses-check", "--fixture", str(bad)]) == 2
