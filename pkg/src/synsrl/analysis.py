"""Span-level SRL scoring and error analysis.

Scoring follows the CoNLL-2005 convention: a predicted argument is correct
iff a gold argument of the same predicate has the same label, start and
end; V spans are ignored.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Sequence

from .treebank import LabeledSpan, PredicateFrame

ORACLE_KINDS = (
    "FixLabels", "MoveCoreArg", "MergeSpans", "SplitSpans",
    "FixSpanBoundary", "DropArg", "AddArg",
)
CORE_ROLES = frozenset(f"A{k}" for k in range(6))
DISTANCE_BINS = ((0, 0), (1, 2), (3, 6), (7, None))


class AlignmentError(ValueError):
    pass


def _ratio(a: int, b: int) -> float:
    return a / b if b else 0.0


def f1_score(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r else 0.0


@dataclass
class LabelCounts:
    gold: int = 0
    pred: int = 0
    correct: int = 0

    @property
    def precision(self) -> float:
        return 100.0 * _ratio(self.correct, self.pred)

    @property
    def recall(self) -> float:
        return 100.0 * _ratio(self.correct, self.gold)

    @property
    def f1(self) -> float:
        return f1_score(self.precision, self.recall)


@dataclass
class EvalReport:
    """Precision, recall and F1 in percent; ``comp`` is a fraction in [0, 1]."""

    gold: int
    pred: int
    correct: int
    comp: float | None
    per_label: dict[str, LabelCounts] = field(default_factory=dict)

    @property
    def precision(self) -> float:
        return 100.0 * _ratio(self.correct, self.pred)

    @property
    def recall(self) -> float:
        return 100.0 * _ratio(self.correct, self.gold)

    @property
    def f1(self) -> float:
        return f1_score(self.precision, self.recall)

    def to_dict(self) -> dict:
        return {
            "P": self.precision, "R": self.recall, "F1": self.f1, "Comp": self.comp,
            "gold": self.gold, "pred": self.pred, "correct": self.correct,
            "per_label": {k: {**asdict(v), "P": v.precision, "R": v.recall, "F1": v.f1}
                          for k, v in sorted(self.per_label.items())},
        }

    def table(self) -> str:
        lines = [f"{'label':<12}{'corr':>7}{'excess':>8}{'missed':>8}{'P':>8}{'R':>8}{'F1':>8}"]
        for role, c in sorted(self.per_label.items()):
            lines.append(f"{role:<12}{c.correct:>7}{c.pred - c.correct:>8}{c.gold - c.correct:>8}"
                         f"{c.precision:>8.2f}{c.recall:>8.2f}{c.f1:>8.2f}")
        lines.append(f"{'overall':<12}{self.correct:>7}{self.pred - self.correct:>8}"
                     f"{self.gold - self.correct:>8}{self.precision:>8.2f}{self.recall:>8.2f}"
                     f"{self.f1:>8.2f}")
        if self.comp is not None:
            lines.append(f"complete predicates: {100 * self.comp:.2f}%")
        return "\n".join(lines)


def _args(frame: PredicateFrame) -> list[LabeledSpan]:
    return list(frame.arguments())


def _check_aligned(gold: Sequence[PredicateFrame], pred: Sequence[PredicateFrame]) -> None:
    if len(gold) != len(pred):
        raise AlignmentError(f"{len(gold)} gold predicates but {len(pred)} predicted")
    for k, (g, p) in enumerate(zip(gold, pred)):
        if g.predicate != p.predicate:
            raise AlignmentError(f"predicate #{k}: gold at token {g.predicate}, "
                                 f"predicted at token {p.predicate}")


def _score_spans(pairs, comp: bool) -> EvalReport:
    per_label: dict[str, LabelCounts] = {}
    n_gold = n_pred = n_correct = complete = frames = 0
    for gold_spans, pred_spans in pairs:
        g, p = Counter(gold_spans), Counter(pred_spans)
        hit = g & p
        for s, c in g.items():
            per_label.setdefault(s.role, LabelCounts()).gold += c
        for s, c in p.items():
            per_label.setdefault(s.role, LabelCounts()).pred += c
        for s, c in hit.items():
            per_label[s.role].correct += c
        n_gold += sum(g.values())
        n_pred += sum(p.values())
        n_correct += sum(hit.values())
        frames += 1
        complete += g == p
    return EvalReport(n_gold, n_pred, n_correct, _ratio(complete, frames) if comp else None,
                      per_label)


def evaluate(gold: Sequence[PredicateFrame], pred: Sequence[PredicateFrame]) -> EvalReport:
    """Score predicted frames against gold frames aligned one-to-one."""
    _check_aligned(gold, pred)
    return _score_spans(((_args(g), _args(p)) for g, p in zip(gold, pred)), comp=True)


def span_distance(span: LabeledSpan, p: int) -> int:
    if span.start <= p <= span.end:
        return 0
    return span.start - p if p < span.start else p - span.end


def bin_name(lo: int, hi: int | None) -> str:
    if hi is None:
        return f"{lo}+"
    return str(lo) if lo == hi else f"{lo}-{hi}"


def distance_bin(d: int, bins=DISTANCE_BINS) -> str:
    for lo, hi in bins:
        if d >= lo and (hi is None or d <= hi):
            return bin_name(lo, hi)
    raise ValueError(f"distance {d} falls in no bin")


def f1_by_distance(gold: Sequence[PredicateFrame], pred: Sequence[PredicateFrame],
                   bins=DISTANCE_BINS) -> dict[str, EvalReport]:
    """Per-bin scores, binning each span by its token distance to the predicate."""
    _check_aligned(gold, pred)
    out = {}
    for lo, hi in bins:
        name = bin_name(lo, hi)

        def keep(frame):
            return [s for s in _args(frame)
                    if distance_bin(span_distance(s, frame.predicate), bins) == name]

        out[name] = _score_spans(((keep(g), keep(p)) for g, p in zip(gold, pred)), comp=False)
    return out


# ---------------------------------------------------------------------------
# oracle transformations


def _exact(spans, gold) -> set[LabeledSpan]:
    """Gold spans already predicted exactly."""
    return set(spans) & set(gold)


def _conflicts(span: LabeledSpan, others) -> bool:
    return any(span.overlaps(o) for o in others)


def _fix_labels(spans, gold):
    by_bounds = {(g.start, g.end): g for g in gold}
    return [by_bounds.get((s.start, s.end), s) for s in spans]


def _move_core_arg(spans, gold):
    spans = list(spans)
    for k, s in enumerate(spans):
        if s.role not in CORE_ROLES or s in gold:
            continue
        if any((g.start, g.end) == (s.start, s.end) for g in gold):
            continue  # right boundaries, wrong label: not a boundary error
        taken = _exact(spans, gold)
        targets = [g for g in gold if g.role == s.role and g not in taken]
        if not targets:
            continue
        target = min(targets, key=lambda g: (abs(g.start - s.start), g.start))
        if _conflicts(target, spans[:k] + spans[k + 1:]):
            continue
        spans[k] = target
    return spans


def _merge_spans(spans, gold):
    spans = sorted(spans)
    changed = True
    while changed:
        changed = False
        taken = _exact(spans, gold)
        for k in range(len(spans) - 1):
            a, b = spans[k], spans[k + 1]
            if a in gold or b in gold:
                continue
            for g in gold:
                if g not in taken and (g.start, g.end) == (a.start, b.end):
                    spans[k:k + 2] = [g]
                    changed = True
                    break
            if changed:
                break
    return spans


def _split_spans(spans, gold):
    out = []
    gold_sorted = sorted(gold)
    for s in spans:
        if s in gold:
            out.append(s)
            continue
        inside = [g for g in gold_sorted if s.start <= g.start and g.end <= s.end]
        tiles = (len(inside) >= 2 and inside[0].start == s.start and inside[-1].end == s.end
                 and all(x.end + 1 == y.start for x, y in zip(inside, inside[1:])))
        if tiles and not any(g in spans for g in inside):
            out.extend(inside)
        else:
            out.append(s)
    return out


def _fix_span_boundary(spans, gold):
    spans = list(spans)
    for k, s in enumerate(spans):
        if s in gold:
            continue
        taken = _exact(spans, gold)
        targets = [g for g in gold if g.role == s.role and g.overlaps(s) and g not in taken]
        if not targets:
            continue
        target = max(targets, key=lambda g: (min(g.end, s.end) - max(g.start, s.start), -g.start))
        if _conflicts(target, spans[:k] + spans[k + 1:]):
            continue
        spans[k] = target
    return spans


def _drop_arg(spans, gold):
    # literal case: no overlap with any gold span; anything still unmatched at
    # this point is residue no earlier stage could attribute, dropped as well
    return [s for s in spans if s in gold]


def _add_arg(spans, gold):
    return sorted(set(spans) | set(gold))


_TRANSFORMS = {
    "FixLabels": _fix_labels,
    "MoveCoreArg": _move_core_arg,
    "MergeSpans": _merge_spans,
    "SplitSpans": _split_spans,
    "FixSpanBoundary": _fix_span_boundary,
    "DropArg": _drop_arg,
    "AddArg": _add_arg,
}


def oracle_transform(pred: PredicateFrame, gold: PredicateFrame, kind: str) -> PredicateFrame:
    """Apply one gold-informed correction to a predicted frame."""
    if kind not in _TRANSFORMS:
        raise ValueError(f"unknown oracle transformation {kind!r}; "
                         f"expected one of {', '.join(ORACLE_KINDS)}")
    if pred.predicate != gold.predicate:
        raise AlignmentError(f"predicates differ: {pred.predicate} vs {gold.predicate}")
    gold_args = frozenset(_args(gold))
    kept_v = [s for s in pred.spans if s.role == "V"]
    spans = _TRANSFORMS[kind](_args(pred), gold_args)
    return PredicateFrame(pred.predicate, tuple(spans) + tuple(kept_v))


def oracle_curve(pred: Sequence[PredicateFrame], gold: Sequence[PredicateFrame]
                 ) -> list[tuple[str, float]]:
    """F1 after each cumulative transformation, starting from the original output."""
    _check_aligned(gold, pred)
    current = list(pred)
    curve = [("Orig", evaluate(gold, current).f1)]
    for kind in ORACLE_KINDS:
        current = [oracle_transform(p, g, kind) for p, g in zip(current, gold)]
        curve.append((kind, evaluate(gold, current).f1))
    return curve


def analysis_report(gold: Sequence[PredicateFrame], pred: Sequence[PredicateFrame]) -> dict:
    report = evaluate(gold, pred).to_dict()
    report["per_bin"] = {k: v.to_dict() for k, v in f1_by_distance(gold, pred).items()}
    report["oracle_curve"] = [{"stage": k, "F1": f} for k, f in oracle_curve(pred, gold)]
    return report


def format_analysis(report: dict) -> str:
    lines = [f"overall  P={report['P']:.2f}  R={report['R']:.2f}  F1={report['F1']:.2f}  "
             f"Comp={100 * report['Comp']:.2f}%", "", "F1 by distance to predicate:"]
    for name, r in report["per_bin"].items():
        lines.append(f"  {name:>5}  gold={r['gold']:<6} pred={r['pred']:<6} F1={r['F1']:.2f}")
    lines += ["", "oracle transformations (cumulative):"]
    for entry in report["oracle_curve"]:
        lines.append(f"  {entry['stage']:<16} {entry['F1']:.2f}")
    return "\n".join(lines)


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True)
