"""Classification validation: one-vs-rest confusion counts, P/R/F1."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .classify import CATEGORIES, UNLABELED, TopicCategory, parse_label
from .errors import IdSetMismatch


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def precision_defined(self) -> bool:
        return self.tp + self.fp > 0

    @property
    def recall_defined(self) -> bool:
        return self.tp + self.fn > 0

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn)


def precision(c: ConfusionCounts) -> float:
    """tp / (tp + fp); 0.0 when undefined (see ``c.precision_defined``)."""
    return c.tp / (c.tp + c.fp) if c.precision_defined else 0.0


def recall(c: ConfusionCounts) -> float:
    return c.tp / (c.tp + c.fn) if c.recall_defined else 0.0


def f1(p: float, r: float) -> float:
    if not (0.0 <= p <= 1.0 and 0.0 <= r <= 1.0):
        raise ValueError("precision and recall must lie in [0, 1]")
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def _label(value) -> str:
    return value.value if isinstance(value, TopicCategory) else str(value)


def confusion(
    predictions: Mapping[str, object],
    ground_truth: Mapping[str, object],
    categories: Sequence[TopicCategory] = CATEGORIES,
) -> dict[TopicCategory, ConfusionCounts]:
    """One-vs-rest counts per category over a shared id set.

    A prediction outside the taxonomy (e.g. ``Unlabeled``) is wrong for every
    category: it adds a false negative for the true class and nothing else.
    """
    pred_ids, true_ids = set(predictions), set(ground_truth)
    if pred_ids != true_ids:
        raise IdSetMismatch(true_ids - pred_ids, pred_ids - true_ids)
    pairs = [(_label(predictions[i]), _label(ground_truth[i])) for i in true_ids]
    out = {}
    n = len(pairs)
    for c in categories:
        tp = sum(1 for p, t in pairs if p == c.value and t == c.value)
        fp = sum(1 for p, t in pairs if p == c.value and t != c.value)
        fn = sum(1 for p, t in pairs if p != c.value and t == c.value)
        out[c] = ConfusionCounts(tp, fp, fn, n - tp - fp - fn)
    return out


@dataclass(frozen=True)
class CategoryMetrics:
    precision: float
    recall: float
    f1: float
    counts: ConfusionCounts

    @property
    def undefined(self) -> list[str]:
        flags = []
        if not self.counts.precision_defined:
            flags.append("precision")
        if not self.counts.recall_defined:
            flags.append("recall")
        return flags


@dataclass(frozen=True)
class Averages:
    precision: float
    recall: float
    f1: float


@dataclass
class EvalReport:
    per_category: dict[TopicCategory, CategoryMetrics]
    macro: Averages
    micro: Averages
    n_evaluated: int
    # harmonic mean of macro P and macro R, the other common "macro F1"
    macro_f1_of_means: float = 0.0
    accuracy: float = 0.0
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        per = {}
        for c, m in self.per_category.items():
            per[c.value] = {
                "precision": m.precision,
                "recall": m.recall,
                "f1": m.f1,
                "tp": m.counts.tp,
                "fp": m.counts.fp,
                "fn": m.counts.fn,
                "tn": m.counts.tn,
                "undefined": m.undefined,
            }
        return {
            "n_evaluated": self.n_evaluated,
            "accuracy": self.accuracy,
            "per_category": per,
            "macro": vars(self.macro),
            "macro_f1_of_means": self.macro_f1_of_means,
            "micro": vars(self.micro),
            "notes": self.notes,
        }

    def table(self) -> str:
        rows = [f"{'category':<20}{'precision':>10}{'recall':>10}{'f1':>10}{'support':>9}"]
        for c, m in self.per_category.items():
            flag = " *" if m.undefined else ""
            rows.append(
                f"{c.display_name:<20}{m.precision:>10.4f}{m.recall:>10.4f}{m.f1:>10.4f}"
                f"{m.counts.tp + m.counts.fn:>9d}{flag}"
            )
        rows.append(f"{'macro':<20}{self.macro.precision:>10.4f}{self.macro.recall:>10.4f}{self.macro.f1:>10.4f}")
        rows.append(f"{'micro':<20}{self.micro.precision:>10.4f}{self.micro.recall:>10.4f}{self.micro.f1:>10.4f}")
        rows.append(f"n={self.n_evaluated}  macro F1 of mean P/R={self.macro_f1_of_means:.4f}")
        if any(m.undefined for m in self.per_category.values()):
            rows.append("* metric undefined (no support or no predictions); reported as 0")
        return "\n".join(rows)


def evaluate(predictions: Mapping[str, object], ground_truth: Mapping[str, object]) -> EvalReport:
    counts = confusion(predictions, ground_truth)
    per = {}
    for c, cc in counts.items():
        p, r = precision(cc), recall(cc)
        per[c] = CategoryMetrics(p, r, f1(p, r), cc)

    k = len(per)
    macro = Averages(
        sum(m.precision for m in per.values()) / k,
        sum(m.recall for m in per.values()) / k,
        sum(m.f1 for m in per.values()) / k,
    )
    total = ConfusionCounts()
    for cc in counts.values():
        total = total + cc
    mp, mr = precision(total), recall(total)
    micro = Averages(mp, mr, f1(mp, mr))

    n = len(ground_truth)
    correct = sum(1 for i in ground_truth if _label(predictions[i]) == _label(ground_truth[i]))
    return EvalReport(
        per_category=per,
        macro=macro,
        micro=micro,
        n_evaluated=n,
        macro_f1_of_means=f1(macro.precision, macro.recall),
        accuracy=correct / n if n else 0.0,
    )


def load_labels(path: str | Path, field_name: str = "category") -> dict[str, str]:
    """``{id: label}`` from JSONL; meta header lines are skipped."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            if "_meta" in rec:
                continue
            label = rec[field_name]
            out[str(rec["id"])] = label if label == UNLABELED else parse_label(label).value
    return out
