"""Tests for assignment matching, mIoU variants, and success rates."""

import io
import itertools
import json
import math
import random

import numpy as np
import pytest

from layouteval.annotations import ValidPair, valid_overlap_pairs
from layouteval.geometry import BBox, iou
from layouteval.matching import (
    DetectionSet,
    JudgmentFile,
    Matching,
    MatchPair,
    RelationshipVerdict,
    hungarian_match,
    instance_category,
    match_record,
    miou,
    o_miou,
    parse_detections,
    parse_judgments,
    success_rate,
)

from conftest import mk_inst, mk_record


def rand_box(rng: random.Random) -> BBox:
    x = rng.uniform(0.0, 0.7)
    y = rng.uniform(0.0, 0.7)
    return BBox(x, y, x + rng.uniform(0.05, 0.3), y + rng.uniform(0.05, 0.3))


def brute_force_max_total(matrix: np.ndarray) -> float:
    """Exhaustive assignment optimum; feasible up to 7 boxes per side."""
    n, m = matrix.shape
    best = 0.0
    if n <= m:
        for cols in itertools.permutations(range(m), n):
            best = max(best, math.fsum(float(matrix[i, c]) for i, c in enumerate(cols)))
    else:
        for rows in itertools.permutations(range(n), m):
            best = max(best, math.fsum(float(matrix[r, j]) for j, r in enumerate(rows)))
    return best


def iou_matrix(gt_boxes, pred_boxes) -> np.ndarray:
    out = np.zeros((len(gt_boxes), len(pred_boxes)))
    for i, g in enumerate(gt_boxes):
        for j, p in enumerate(pred_boxes):
            out[i, j] = iou(g, p)
    return out


class TestInstanceCategory:
    def test_strips_trailing_index(self):
        assert instance_category("cat_2") == "cat"
        assert instance_category("traffic_light_10") == "traffic_light"

    def test_plain_name_unchanged(self):
        assert instance_category("cat") == "cat"
        assert instance_category("route_66_sign") == "route_66_sign"


class TestHungarianMatch:
    def test_permutation_recovery(self):
        rng = random.Random(211)
        boxes = []
        while len(boxes) < 5:
            candidate = rand_box(rng)
            if all(iou(candidate, b) < 0.99 for b in boxes):
                boxes.append(candidate)
        gt = [(f"g{i}", b) for i, b in enumerate(boxes)]
        shuffled = list(boxes)
        rng.shuffle(shuffled)
        m = hungarian_match(gt, shuffled)
        assert len(m.pairs) == 5 and m.unmatched_gt == ()
        assert all(p.iou == 1.0 for p in m.pairs)
        assert m.total_iou == 5.0

    def test_empty_pred_all_unmatched(self):
        gt = [("a", BBox(0, 0, 0.5, 0.5)), ("b", BBox(0.5, 0.5, 1, 1))]
        m = hungarian_match(gt, [])
        assert m.pairs == () and m.unmatched_gt == ("a", "b")

    def test_empty_gt_rejected(self):
        with pytest.raises(ValueError, match="non-empty"):
            hungarian_match([], [BBox(0, 0, 0.5, 0.5)])

    def test_rectangular_4x5_matches_exhaustive_optimum(self):
        rng = random.Random(223)
        for _ in range(20):
            gt_boxes = [rand_box(rng) for _ in range(4)]
            pred_boxes = [rand_box(rng) for _ in range(5)]
            m = hungarian_match([(f"g{i}", b) for i, b in enumerate(gt_boxes)], pred_boxes)
            assert m.total_iou == brute_force_max_total(iou_matrix(gt_boxes, pred_boxes))

    def test_more_gt_than_pred_skips_weak_row(self):
        strong = BBox(0.5, 0.5, 0.9, 0.9)
        weak = BBox(0.0, 0.0, 0.4, 0.4)
        pred = BBox(0.52, 0.52, 0.9, 0.9)  # overlaps strong heavily, weak not at all
        m = hungarian_match([("weak", weak), ("strong", strong)], [pred])
        assert m.unmatched_gt == ("weak",)
        assert m.pairs[0].gt_name == "strong"

    def test_tie_prefers_lowest_pred_index(self):
        box = BBox(0.2, 0.2, 0.6, 0.6)
        m = hungarian_match([("only", box)], [box, box, box])
        assert m.pairs == (MatchPair("only", 0, 1.0),)

    def test_tie_prefers_lowest_gt_order(self):
        box = BBox(0.2, 0.2, 0.6, 0.6)
        m = hungarian_match([("first", box), ("second", box)], [box])
        assert m.pairs == (MatchPair("first", 0, 1.0),)
        assert m.unmatched_gt == ("second",)

    def test_total_invariant_under_pred_permutation(self):
        rng = random.Random(227)
        for _ in range(20):
            gt = [(f"g{i}", rand_box(rng)) for i in range(4)]
            pred = [rand_box(rng) for _ in range(4)]
            base = hungarian_match(gt, pred).total_iou
            shuffled = list(pred)
            rng.shuffle(shuffled)
            assert hungarian_match(gt, shuffled).total_iou == pytest.approx(base, abs=1e-12)

    def test_spurious_prediction_never_decreases_total(self):
        rng = random.Random(229)
        for _ in range(20):
            gt = [(f"g{i}", rand_box(rng)) for i in range(3)]
            pred = [rand_box(rng) for _ in range(3)]
            base = hungarian_match(gt, pred).total_iou
            augmented = hungarian_match(gt, pred + [rand_box(rng)]).total_iou
            assert augmented >= base - 1e-12

    def test_min_iou_gate_demotes_weak_pairs(self):
        gt = [("a", BBox(0, 0, 0.5, 0.5))]
        pred = [BBox(0.4, 0.4, 0.9, 0.9)]  # small positive overlap
        gated = hungarian_match(gt, pred, min_iou=0.5)
        assert gated.pairs == () and gated.unmatched_gt == ("a",)
        open_match = hungarian_match(gt, pred)
        assert len(open_match.pairs) == 1

    def test_matching_rejects_duplicates(self):
        with pytest.raises(ValueError, match="name appears twice"):
            Matching(pairs=(MatchPair("a", 0, 1.0),), unmatched_gt=("a",))
        with pytest.raises(ValueError, match="index appears twice"):
            Matching(
                pairs=(MatchPair("a", 0, 1.0), MatchPair("b", 0, 0.5)), unmatched_gt=()
            )


def detections_from_record(record, jitter=None, seed="20251202"):
    """Detections mirroring a record's own boxes, optionally shifted."""
    categories: dict[str, list] = {}
    for inst in record.instances:
        box = inst.bbox
        if jitter:
            dx, dy = jitter.get(inst.name, (0.0, 0.0))
            box = BBox(box.x1 + dx, box.y1 + dy, box.x2 + dx, box.y2 + dy)
        categories.setdefault(instance_category(inst.name), []).append(box)
    return DetectionSet(
        record_id=record.id,
        seed=seed,
        categories={k: tuple(v) for k, v in categories.items()},
    )


class TestMiou:
    def test_perfect_detections_exactly_one(self, three_instance_record):
        d = detections_from_record(three_instance_record)
        assert miou(three_instance_record, d) == 1.0

    def test_no_detections_zero(self, three_instance_record):
        d = DetectionSet(record_id="rec_001", seed="s", categories={})
        assert miou(three_instance_record, d) == 0.0

    def test_hand_arithmetic_three_instances(self):
        # obj_1 matched at iou 0.6, obj_2 at 0.9, obj_3 unmatched
        r = mk_record(
            "r",
            [
                mk_inst("obj_1", (0.0, 0.0, 0.5, 0.5)),
                mk_inst("obj_2", (0.5, 0.5, 1.0, 0.9)),
                mk_inst("obj_3", (0.6, 0.0, 0.9, 0.3)),
            ],
        )
        pred_1 = BBox(0.0, 0.0, 0.5, 0.3)  # nested in obj_1: iou 0.15/0.25 = 0.6
        # nested in obj_2 with 0.9 of its area: iou 0.18/0.2 = 0.9
        pred_2 = BBox(0.5, 0.5, 1.0, 0.86)
        d = DetectionSet(record_id="r", seed="s", categories={"obj": (pred_1, pred_2)})
        expected = (0.6 + 0.9 + 0.0) / 3
        assert miou(r, d) == pytest.approx(expected, abs=1e-9)

    def test_id_mismatch_rejected(self, three_instance_record):
        d = DetectionSet(record_id="other", seed="s", categories={})
        with pytest.raises(ValueError, match="does not match"):
            miou(three_instance_record, d)

    def test_per_category_respects_categories(self):
        r = mk_record(
            "r",
            [mk_inst("cat_1", (0.0, 0.0, 0.4, 0.4)), mk_inst("dog_1", (0.5, 0.5, 0.9, 0.9))],
        )
        # boxes perfect but swapped categories: per-category finds nothing
        d = DetectionSet(
            record_id="r",
            seed="s",
            categories={"cat": (BBox(0.5, 0.5, 0.9, 0.9),), "dog": (BBox(0.0, 0.0, 0.4, 0.4),)},
        )
        assert miou(r, d, scope="per_category") == 0.0
        assert miou(r, d, scope="global") == 1.0

    def test_miou_one_implies_exact_duplicates(self):
        rng = random.Random(233)
        for _ in range(10):
            insts = [mk_inst(f"o_{k}", rand_box(rng).as_tuple()) for k in range(3)]
            r = mk_record("r", insts)
            exact = detections_from_record(r)
            assert miou(r, exact) == 1.0
            shifted = detections_from_record(r, jitter={"o_0": (0.005, 0.0)})
            assert miou(r, shifted) < 1.0


class TestOverlapMiou:
    def overlapping_record(self):
        return mk_record(
            "r",
            [
                mk_inst("a_1", (0.0, 0.0, 0.5, 0.5)),
                mk_inst("b_1", (0.3, 0.3, 0.8, 0.8)),
                mk_inst("c_1", (0.6, 0.0, 0.9, 0.25)),
            ],
            rels=[("a_1", "b_1", "a overlaps b")],
        )

    def test_perfect_detections_value_one(self):
        r = self.overlapping_record()
        result = o_miou(r, detections_from_record(r))
        assert result.value == 1.0
        assert result.excluded == ()

    def test_unmatched_instance_contributes_zero(self):
        r = self.overlapping_record()
        # no detections for category "a": instance a_1 unmatched
        d = detections_from_record(r)
        cats = {k: v for k, v in d.categories.items() if k != "a"}
        result = o_miou(r, DetectionSet(record_id="r", seed="s", categories=cats))
        assert result.value == 0.0
        assert result.pair_scores[0].value == 0.0

    def test_non_intersecting_gt_pair_excluded_with_diagnostic(self):
        r = mk_record(
            "r",
            [mk_inst("a_1", (0.0, 0.0, 0.3, 0.3)), mk_inst("c_1", (0.6, 0.6, 0.9, 0.9))],
            rels=[("a_1", "c_1", "far apart")],
        )
        result = o_miou(r, detections_from_record(r))
        assert result.value is None
        assert len(result.excluded) == 1
        assert "do not intersect" in result.excluded[0].reason

    def test_non_overlapping_predictions_give_zero(self):
        r = mk_record(
            "r",
            [mk_inst("a_1", (0.0, 0.0, 0.5, 0.5)), mk_inst("b_1", (0.3, 0.3, 0.8, 0.8))],
            rels=[("a_1", "b_1", "a overlaps b")],
        )
        # both instances matched, but the predicted boxes are disjoint
        d = DetectionSet(
            record_id="r",
            seed="s",
            categories={"a": (BBox(0.0, 0.0, 0.2, 0.2),), "b": (BBox(0.6, 0.6, 0.8, 0.8),)},
        )
        result = o_miou(r, d)
        assert result.value == 0.0

    def test_shifted_predictions_match_brute_force(self):
        r = self.overlapping_record()
        jitter = {"a_1": (0.05, 0.0), "b_1": (0.0, 0.05), "c_1": (0.0, 0.0)}
        d = detections_from_record(r, jitter=jitter)
        result = o_miou(r, d)
        # independent recomputation from raw geometry
        from layouteval.geometry import intersect

        matches = match_record(r, d)
        expected_scores = []
        for rel in r.relationships:
            gt_region = intersect(r.instance(rel.subject).bbox, r.instance(rel.object).bbox)
            mi, mj = matches[rel.subject], matches[rel.object]
            pred_region = intersect(mi[0], mj[0]) if mi and mj else None
            expected_scores.append(iou(gt_region, pred_region) if pred_region else 0.0)
        expected = math.fsum(expected_scores) / len(expected_scores)
        assert result.value == pytest.approx(expected, abs=1e-12)
        assert 0.0 < result.value < 1.0

    def test_explicit_valid_overlap_pairs(self):
        r = self.overlapping_record()
        pairs = valid_overlap_pairs(r, iou_min=0.0, area_min=0.0)
        result = o_miou(r, detections_from_record(r), pairs=pairs)
        assert result.value == 1.0
        assert len(result.pair_scores) == len(pairs)

    def test_no_pairs_value_none(self):
        r = mk_record(
            "r", [mk_inst("a_1", (0.0, 0.0, 0.3, 0.3)), mk_inst("b_1", (0.5, 0.5, 0.9, 0.9))]
        )
        result = o_miou(r, detections_from_record(r))
        assert result.value is None and result.pair_scores == ()

    def test_value_never_exceeds_one(self):
        rng = random.Random(239)
        for _ in range(20):
            insts = [mk_inst(f"o_{k}", rand_box(rng).as_tuple()) for k in range(4)]
            r = mk_record("r", insts)
            pairs = valid_overlap_pairs(r, iou_min=0.0, area_min=0.0)
            if not pairs:
                continue
            jitter = {f"o_{k}": (rng.uniform(-0.02, 0.02), rng.uniform(-0.02, 0.02)) for k in range(4)}
            jitter = {
                name: (dx, dy)
                for (name, (dx, dy)) in jitter.items()
                if all(
                    0 <= c + d <= 1
                    for inst in insts
                    if inst.name == name
                    for c, d in [
                        (inst.bbox.x1, dx),
                        (inst.bbox.x2, dx),
                        (inst.bbox.y1, dy),
                        (inst.bbox.y2, dy),
                    ]
                )
            }
            d = detections_from_record(r, jitter=jitter)
            result = o_miou(r, d, pairs=pairs)
            if result.value is not None:
                assert 0.0 <= result.value <= 1.0


def judgment(record_id, entities, rels=(), seed="20251202"):
    return JudgmentFile(
        record_id=record_id,
        seed=seed,
        entities=entities,
        relationships=tuple(RelationshipVerdict(s, o, v) for s, o, v in rels),
    )


class TestSuccessRate:
    def records_by_id(self):
        r1 = mk_record(
            "r1",
            [mk_inst("a", (0.0, 0.0, 0.5, 0.5)), mk_inst("b", (0.3, 0.3, 0.8, 0.8))],
            rels=[("a", "b", "a touches b")],
        )
        r2 = mk_record(
            "r2",
            [mk_inst("x", (0.0, 0.0, 0.4, 0.4)), mk_inst("y", (0.2, 0.2, 0.6, 0.6))],
            rels=[("x", "y", "x leans on y")],
        )
        return {"r1": r1, "r2": r2}

    def test_all_yes_is_one(self):
        records = self.records_by_id()
        js = [judgment("r1", {"a": True, "b": True}), judgment("r2", {"x": True, "y": True})]
        result = success_rate(js, records, kind="entity")
        assert result.pooled == 1.0
        assert result.per_record == {"r1": 1.0, "r2": 1.0}

    def test_all_no_is_zero(self):
        records = self.records_by_id()
        js = [judgment("r1", {"a": False, "b": False})]
        assert success_rate(js, records, kind="entity").pooled == 0.0

    def test_seven_of_ten(self):
        records = self.records_by_id()
        # r1 contributes 2 entities x 3 seeds, r2 contributes 2 x 2 = 10 total
        js = [
            judgment("r1", {"a": True, "b": True}, seed="s1"),
            judgment("r1", {"a": True, "b": False}, seed="s2"),
            judgment("r1", {"a": True, "b": True}, seed="s3"),
            judgment("r2", {"x": False, "y": True}, seed="s1"),
            judgment("r2", {"x": False, "y": True}, seed="s2"),
        ]
        result = success_rate(js, records, kind="entity")
        assert result.pooled == pytest.approx(0.7, abs=1e-15)
        assert (result.yes, result.total) == (7, 10)
        assert result.per_record["r1"] == pytest.approx(5 / 6, abs=1e-15)
        assert result.per_record["r2"] == pytest.approx(0.5, abs=1e-15)

    def test_relationship_kind(self):
        records = self.records_by_id()
        js = [
            judgment("r1", {}, rels=[("a", "b", True)]),
            judgment("r2", {}, rels=[("x", "y", False)]),
        ]
        result = success_rate(js, records, kind="relationship")
        assert result.pooled == 0.5

    def test_reversed_pair_order_still_resolves(self):
        records = self.records_by_id()
        js = [judgment("r1", {}, rels=[("b", "a", True)])]
        result = success_rate(js, records, kind="relationship")
        assert result.pooled == 1.0 and result.diagnostics == ()

    def test_unknown_instance_rejected_with_diagnostic(self):
        records = self.records_by_id()
        js = [judgment("r1", {"a": True, "ghost": True})]
        result = success_rate(js, records, kind="entity")
        assert (result.yes, result.total) == (1, 1)
        assert len(result.diagnostics) == 1
        assert "ghost" in result.diagnostics[0].reason

    def test_unknown_record_rejected(self):
        result = success_rate([judgment("nope", {"a": True})], self.records_by_id(), "entity")
        assert result.total == 0 and result.pooled is None
        assert "unknown record" in result.diagnostics[0].reason

    def test_pooled_matches_independent_recount(self):
        rng = random.Random(241)
        records = self.records_by_id()
        js = []
        expected_yes = expected_total = 0
        for k in range(30):
            rid = rng.choice(["r1", "r2"])
            names = [i.name for i in records[rid].instances]
            verdicts = {n: rng.random() < 0.7 for n in names}
            expected_yes += sum(verdicts.values())
            expected_total += len(verdicts)
            js.append(judgment(rid, verdicts, seed=f"seed{k}"))
        result = success_rate(js, records, kind="entity")
        assert (result.yes, result.total) == (expected_yes, expected_total)
        assert result.pooled == pytest.approx(expected_yes / expected_total, abs=1e-15)


class TestParsers:
    def test_detection_round_trip(self):
        line = {
            "id": "r1",
            "seed": "20251202",
            "categories": {"cat": [[0.1, 0.1, 0.4, 0.4]], "dog": [[0.5, 0.5, 0.9, 0.9]]},
        }
        sets, diags = parse_detections(io.StringIO(json.dumps(line)))
        assert diags == []
        assert sets[0].record_id == "r1"
        assert sets[0].categories["cat"][0] == BBox(0.1, 0.1, 0.4, 0.4)

    def test_bad_detection_box_diagnostic(self):
        line = {"id": "r1", "seed": "s", "categories": {"cat": [[0.5, 0.5, 0.1, 0.1]]}}
        sets, diags = parse_detections(io.StringIO(json.dumps(line)))
        assert sets == [] and len(diags) == 1

    def test_judgment_round_trip(self):
        line = {
            "id": "r1",
            "seed": "20251203",
            "entities": {"a": "Yes", "b": "No"},
            "relationships": [{"subject": "a", "object": "b", "verdict": "Yes"}],
        }
        js, diags = parse_judgments(io.StringIO(json.dumps(line)))
        assert diags == []
        assert js[0].entities == {"a": True, "b": False}
        assert js[0].relationships[0] == RelationshipVerdict("a", "b", True)

    def test_bad_verdict_value_diagnostic(self):
        line = {"id": "r1", "seed": "s", "entities": {"a": "maybe"}}
        js, diags = parse_judgments(io.StringIO(json.dumps(line)))
        assert js == [] and "maybe" in diags[0].reason

    def test_invalid_json_line(self):
        js, diags = parse_judgments(io.StringIO("{broken"))
        assert js == [] and "invalid JSON" in diags[0].reason
