import numpy as np
import pytest

from synsrl.analysis import (
    ORACLE_KINDS,
    AlignmentError,
    evaluate,
    f1_by_distance,
    oracle_curve,
    oracle_transform,
    span_distance,
)
from synsrl.synthetic import random_frame
from synsrl.treebank import LabeledSpan as S
from synsrl.treebank import PredicateFrame


def F(p, *spans):
    return PredicateFrame(p, tuple(S(a, b, r) for r, a, b in spans))


# (gold frames, pred frames, P, R, F1, Comp) -- counts worked out by hand
CRAFTED = [
    ([F(3, ("A0", 1, 2), ("A1", 4, 4))], [F(3, ("A0", 1, 2), ("A1", 4, 4))], 100, 100, 100, 1.0),
    ([F(3, ("A0", 1, 2), ("A1", 4, 4))], [F(3, ("A0", 1, 2), ("A1", 4, 5))], 50, 50, 50, 0.0),
    ([F(3, ("A0", 1, 2), ("A1", 4, 4))], [F(3)], 0, 0, 0, 0.0),
    # 1 correct of 2 predicted, 1 gold: F1 = 2*50*100/150
    ([F(3, ("A0", 1, 2))], [F(3, ("A0", 1, 2), ("AM-TMP", 5, 5))], 50, 100, 200 / 3, 0.0),
    ([F(3, ("A1", 4, 4))], [F(3, ("A0", 4, 4))], 0, 0, 0, 0.0),
    # 2 correct / 2 predicted / 3 gold, one of two predicates complete
    ([F(2, ("A0", 1, 1), ("A1", 3, 3)), F(4, ("A0", 2, 2))],
     [F(2, ("A0", 1, 1), ("A1", 3, 3)), F(4)], 100, 200 / 3, 80, 0.5),
    # V spans never count
    ([F(2, ("A0", 1, 1), ("V", 2, 3))], [F(2, ("A0", 1, 1))], 100, 100, 100, 1.0),
    ([F(2)], [F(2)], 0, 0, 0, 1.0),
    # 2 correct / 4 predicted / 3 gold: F1 = 2*2/(4+3) = 4/7
    ([F(1, ("A0", 2, 2), ("A1", 3, 4), ("A2", 6, 6))],
     [F(1, ("A0", 2, 2), ("A1", 3, 4), ("A2", 5, 5), ("AM-LOC", 7, 7))], 50, 200 / 3, 400 / 7, 0.0),
    ([F(7, ("A0", 1, 2), ("A1", 4, 6))], [F(7, ("A0", 1, 3), ("A1", 5, 6))], 0, 0, 0, 0.0),
    # 2 correct / 3 predicted / 3 gold across two predicates
    ([F(2, ("A0", 1, 1)), F(5, ("A0", 3, 4), ("A1", 6, 6))],
     [F(2, ("A0", 1, 1)), F(5, ("A2", 3, 4), ("A1", 6, 6))], 200 / 3, 200 / 3, 200 / 3, 0.5),
]


@pytest.mark.parametrize("gold, pred, P, R, F1, comp", CRAFTED)
def test_evaluate_crafted(gold, pred, P, R, F1, comp):
    rep = evaluate(gold, pred)
    assert rep.precision == pytest.approx(P, abs=1e-12)
    assert rep.recall == pytest.approx(R, abs=1e-12)
    assert rep.f1 == pytest.approx(F1, abs=1e-12)
    assert rep.comp == comp
    expected = 2 * rep.precision * rep.recall / (rep.precision + rep.recall) if rep.precision + rep.recall else 0.0
    assert abs(rep.f1 - expected) <= 1e-12


def test_per_label_counts():
    gold, pred = CRAFTED[-1][:2]
    rep = evaluate(gold, pred)
    assert (rep.per_label["A0"].gold, rep.per_label["A0"].pred, rep.per_label["A0"].correct) == (2, 1, 1)
    assert (rep.per_label["A2"].gold, rep.per_label["A2"].pred, rep.per_label["A2"].correct) == (0, 1, 0)
    d = rep.to_dict()
    assert set(d) >= {"P", "R", "F1", "Comp", "per_label"}


def test_swapping_arguments_swaps_p_and_r():
    rng = np.random.default_rng(0)
    for _ in range(100):
        n = int(rng.integers(2, 10))
        g = random_frame(rng, n)
        p = PredicateFrame(g.predicate, random_frame(rng, n).spans)
        p = PredicateFrame(g.predicate, tuple(s for s in p.spans if not s.start <= g.predicate <= s.end))
        a, b = evaluate([g], [p]), evaluate([p], [g])
        assert a.precision == b.recall and a.recall == b.precision and a.f1 == b.f1


def test_misaligned_predicates():
    with pytest.raises(AlignmentError):
        evaluate([F(1)], [F(2)])
    with pytest.raises(AlignmentError):
        evaluate([F(1)], [])


# -- distance bins ----------------------------------------------------------------


def test_span_distance_cases():
    assert span_distance(S(4, 6, "A1"), 3) == 1
    assert span_distance(S(2, 4, "A1"), 3) == 0
    assert span_distance(S(1, 1, "A1"), 8) == 7


def test_bins_partition_counts():
    rng = np.random.default_rng(1)
    gold, pred = [], []
    for _ in range(200):
        n = int(rng.integers(2, 20))
        g = random_frame(rng, n)
        gold.append(g)
        pred.append(PredicateFrame(g.predicate, tuple(
            s for s in random_frame(rng, n).spans if not s.start <= g.predicate <= s.end)))
    overall = evaluate(gold, pred)
    bins = f1_by_distance(gold, pred)
    assert list(bins) == ["0", "1-2", "3-6", "7+"]
    assert sum(b.gold for b in bins.values()) == overall.gold
    assert sum(b.pred for b in bins.values()) == overall.pred
    assert sum(b.correct for b in bins.values()) == overall.correct


def test_adjacent_span_lands_in_first_bin():
    bins = f1_by_distance([F(3, ("A1", 4, 6))], [F(3, ("A1", 4, 6))])
    assert bins["1-2"].gold == 1 and bins["1-2"].f1 == 100


# -- oracle transformations ---------------------------------------------------


def test_fix_span_boundary_snaps():
    out = oracle_transform(F(3, ("A1", 4, 5)), F(3, ("A1", 4, 4)), "FixSpanBoundary")
    assert out == F(3, ("A1", 4, 4))


def test_merge_spans():
    out = oracle_transform(F(6, ("A0", 1, 2), ("A0", 3, 4)), F(6, ("A0", 1, 4)), "MergeSpans")
    assert out == F(6, ("A0", 1, 4))


def test_merge_absorbs_gap_and_relabels():
    out = oracle_transform(F(6, ("A1", 1, 1), ("A2", 3, 4)), F(6, ("A0", 1, 4)), "MergeSpans")
    assert out == F(6, ("A0", 1, 4))


def test_split_spans():
    out = oracle_transform(F(1, ("A1", 2, 5)), F(1, ("A1", 2, 3), ("A2", 4, 5)), "SplitSpans")
    assert out == F(1, ("A1", 2, 3), ("A2", 4, 5))


def test_fix_labels():
    out = oracle_transform(F(1, ("A2", 2, 3), ("A0", 5, 5)), F(1, ("A1", 2, 3)), "FixLabels")
    assert out == F(1, ("A1", 2, 3), ("A0", 5, 5))


def test_move_core_arg_only_for_core_labels():
    gold = F(1, ("A0", 4, 6), ("AM-TMP", 8, 9))
    pred = F(1, ("A0", 3, 4), ("AM-TMP", 8, 8))
    out = oracle_transform(pred, gold, "MoveCoreArg")
    assert out == F(1, ("A0", 4, 6), ("AM-TMP", 8, 8))


def test_move_core_arg_nearest_start():
    gold = F(5, ("A1", 1, 1), ("A1", 7, 8))
    out = oracle_transform(F(5, ("A1", 6, 6)), gold, "MoveCoreArg")
    assert out == F(5, ("A1", 7, 8))


def test_drop_and_add():
    gold = F(1, ("A0", 2, 3))
    assert oracle_transform(F(1, ("A1", 5, 6)), gold, "DropArg") == F(1)
    assert oracle_transform(F(1), gold, "AddArg") == gold


def test_identity_on_perfect_predictions():
    gold = F(3, ("A0", 1, 2), ("A1", 4, 4), ("AM-LOC", 5, 7))
    for kind in ORACLE_KINDS:
        assert oracle_transform(gold, gold, kind) == gold


def test_unknown_kind():
    with pytest.raises(ValueError, match="unknown"):
        oracle_transform(F(1), F(1), "Nope")


def test_perfect_curve_is_flat():
    gold = [F(3, ("A0", 1, 2), ("A1", 4, 4))]
    curve = oracle_curve(gold, gold)
    assert [name for name, _ in curve] == ["Orig", *ORACLE_KINDS]
    assert all(f == 100 for _, f in curve)


def corrupt(rng, gold: PredicateFrame, n: int) -> PredicateFrame:
    """Random label, boundary, split, merge, drop and spurious-span errors."""
    spans = []
    for s in gold.spans:
        r = rng.random()
        if r < 0.15:
            continue
        if r < 0.3:
            spans.append(S(s.start, s.end, str(rng.choice(["A0", "A1", "A2", "AM-TMP"]))))
        elif r < 0.45:
            spans.append(S(s.start, max(s.start, s.end - 1), s.role))
        elif r < 0.55 and s.end > s.start:
            mid = int(rng.integers(s.start, s.end))
            spans += [S(s.start, mid, s.role), S(mid + 1, s.end, s.role)]
        else:
            spans.append(s)
    # occasionally glue neighbours or add a spurious span in free space
    if len(spans) >= 2 and rng.random() < 0.3:
        k = int(rng.integers(0, len(spans) - 1))
        spans = sorted(spans)
        a, b = spans[k], spans[k + 1]
        if not (a.start <= gold.predicate <= b.end):
            spans[k:k + 2] = [S(a.start, b.end, a.role)]
    used = {t for s in spans for t in range(s.start, s.end + 1)} | {gold.predicate}
    free = [t for t in range(1, n + 1) if t not in used]
    if free and rng.random() < 0.5:
        t = int(rng.choice(free))
        spans.append(S(t, t, "A3"))
    return PredicateFrame(gold.predicate, tuple(spans))


def test_transforms_never_lose_correct_spans_and_end_at_gold():
    rng = np.random.default_rng(3)
    for _ in range(300):
        n = int(rng.integers(1, 11))
        gold = random_frame(rng, n)
        pred = corrupt(rng, gold, n) if rng.random() < 0.7 else PredicateFrame(
            gold.predicate, tuple(s for s in random_frame(rng, n).spans
                                  if not s.start <= gold.predicate <= s.end))
        current = pred
        correct = len(set(current.spans) & set(gold.spans))
        for kind in ORACLE_KINDS:
            current = oracle_transform(current, gold, kind)
            now = len(set(current.spans) & set(gold.spans))
            assert now >= correct, kind
            correct = now
        assert current == gold


def test_oracle_curve_monotone_and_complete():
    rng = np.random.default_rng(4)
    for _ in range(100):
        gold, pred = [], []
        for _ in range(int(rng.integers(1, 6))):
            n = int(rng.integers(2, 12))
            g = random_frame(rng, n)
            gold.append(g)
            pred.append(corrupt(rng, g, n))
        if not any(g.spans for g in gold):
            continue
        values = [f for _, f in oracle_curve(pred, gold)]
        assert all(b >= a for a, b in zip(values, values[1:]))
        assert values[-1] == 100.0
