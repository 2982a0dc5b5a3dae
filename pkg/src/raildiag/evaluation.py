"""Stratified cross-validation, F1/coverage metrics and temporal splits.

F1 is computed over classified samples only; unclassified incidents are a
separate axis reported as ``classified_fraction``. Both weighted and macro
averages are always emitted.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ClassTooSmall, EmptySide, IdMismatch
from .model import CLASS_ORDER, SubsystemClass, format_timestamp

UNCLASSIFIED = "Unclassified"


@dataclass(frozen=True)
class CVConfig:
    k: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("fold count must be at least 2")


def stratified_folds(
    labels: Sequence[SubsystemClass], cv: CVConfig
) -> list[list[int]]:
    """Partition sample indices into k folds with per-class counts differing by <= 1.

    Deterministic given the seed: per-class index lists are shuffled, then dealt
    round-robin starting at a rotating fold offset so overall fold sizes stay
    balanced too.
    """
    by_class: dict[SubsystemClass, list[int]] = {}
    for i, label in enumerate(labels):
        by_class.setdefault(label, []).append(i)
    for cls, members in by_class.items():
        if len(members) < cv.k:
            raise ClassTooSmall(
                f"class {cls.value} has {len(members)} samples, fewer than k={cv.k}",
                cls=cls.value,
                count=len(members),
                k=cv.k,
            )
    rng = np.random.default_rng(cv.seed)
    folds: list[list[int]] = [[] for _ in range(cv.k)]
    offset = 0
    for cls in sorted(by_class, key=lambda c: c.value):
        members = by_class[cls]
        order = rng.permutation(len(members))
        for pos, j in enumerate(order):
            folds[(offset + pos) % cv.k].append(members[j])
        offset = (offset + len(members)) % cv.k
    for fold in folds:
        fold.sort()
    return folds


def fold_small_classes(
    labels: Sequence[SubsystemClass], k: int
) -> list[SubsystemClass]:
    """Map classes with fewer than k samples onto Others, for CV-based tuning."""
    counts: dict[SubsystemClass, int] = {}
    for label in labels:
        counts[label] = counts.get(label, 0) + 1
    return [
        label if counts[label] >= k else SubsystemClass.Others for label in labels
    ]


@dataclass
class EvalReport:
    """Classified-only precision/recall/F1 plus coverage and the confusion matrix."""

    per_class: dict[SubsystemClass, dict[str, float]]  # precision, recall, f1, support
    f1_weighted: float
    f1_macro: float
    classified_count: int
    total_count: int
    confusion: dict[SubsystemClass, dict[str, int]]  # truth -> predicted-or-Unclassified

    @property
    def classified_fraction(self) -> float:
        return self.classified_count / self.total_count if self.total_count else 0.0

    def to_dict(self) -> dict:
        return {
            "f1_weighted": self.f1_weighted,
            "f1_macro": self.f1_macro,
            "classified_count": self.classified_count,
            "total_count": self.total_count,
            "classified_fraction": self.classified_fraction,
            "per_class": {
                cls.value: dict(stats) for cls, stats in self.per_class.items()
            },
            "confusion": {
                cls.value: dict(row) for cls, row in self.confusion.items()
            },
        }

    def to_table(self) -> str:
        lines = ["class\tprecision\trecall\tf1\tsupport"]
        for cls in CLASS_ORDER:
            stats = self.per_class.get(cls)
            if stats is None:
                continue
            lines.append(
                f"{cls.value}\t{stats['precision']:.4f}\t{stats['recall']:.4f}"
                f"\t{stats['f1']:.4f}\t{int(stats['support'])}"
            )
        lines.append("")
        lines.append(f"f1_weighted\t{self.f1_weighted:.4f}")
        lines.append(f"f1_macro\t{self.f1_macro:.4f}")
        lines.append(
            f"classified\t{self.classified_count}/{self.total_count}"
            f"\t({self.classified_fraction:.3f})"
        )
        return "\n".join(lines)

    def confusion_table(self) -> str:
        columns = [c.value for c in CLASS_ORDER] + [UNCLASSIFIED]
        lines = ["truth\\pred\t" + "\t".join(columns)]
        for cls in CLASS_ORDER:
            row = self.confusion.get(cls, {})
            lines.append(
                cls.value + "\t" + "\t".join(str(row.get(col, 0)) for col in columns)
            )
        return "\n".join(lines)


def score(
    predictions: Sequence,
    truth: dict[str, SubsystemClass],
) -> EvalReport:
    """Score suggestions against true labels, aligned by incident id.

    ``predictions`` is any sequence of objects with ``incident_id`` and either
    a predicted class (``predicted_class`` not None) or an unclassified
    outcome.
    """
    seen = {p.incident_id for p in predictions}
    if seen != set(truth):
        missing = sorted(set(truth) - seen)[:5]
        extra = sorted(seen - set(truth))[:5]
        raise IdMismatch(
            "prediction ids do not match truth ids",
            missing=missing,
            extra=extra,
        )

    confusion: dict[SubsystemClass, dict[str, int]] = {}
    pairs: list[tuple[SubsystemClass, Optional[SubsystemClass]]] = []
    for pred in predictions:
        actual = truth[pred.incident_id]
        predicted = pred.predicted_class
        row = confusion.setdefault(actual, {})
        col = predicted.value if predicted is not None else UNCLASSIFIED
        row[col] = row.get(col, 0) + 1
        pairs.append((actual, predicted))

    classified = [(a, p) for a, p in pairs if p is not None]
    per_class: dict[SubsystemClass, dict[str, float]] = {}
    truth_classes = sorted({a for a, _ in classified}, key=lambda c: c.value)
    f1_values, supports = [], []
    for cls in truth_classes:
        tp = sum(1 for a, p in classified if a is cls and p is cls)
        fp = sum(1 for a, p in classified if a is not cls and p is cls)
        fn = sum(1 for a, p in classified if a is cls and p is not cls)
        support = tp + fn
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[cls] = {
            "precision": precision,
            "recall": recall,
            "f1": f1,
            "support": float(support),
        }
        f1_values.append(f1)
        supports.append(support)

    total_support = sum(supports)
    f1_weighted = (
        sum(f * s for f, s in zip(f1_values, supports)) / total_support
        if total_support
        else 0.0
    )
    f1_macro = sum(f1_values) / len(f1_values) if f1_values else 0.0
    return EvalReport(
        per_class=per_class,
        f1_weighted=f1_weighted,
        f1_macro=f1_macro,
        classified_count=len(classified),
        total_count=len(pairs),
        confusion=confusion,
    )


def temporal_split(dataset: Sequence, train_end: int) -> tuple[list, list]:
    """Split timestamped incidents (or traces) at ``train_end`` (epoch ms).

    Train keeps items at or before the split instant, validation everything
    after; either side being empty is an error.
    """

    def ts(item) -> int:
        return item.incident.timestamp if hasattr(item, "incident") else item.timestamp

    train = [item for item in dataset if ts(item) <= train_end]
    validation = [item for item in dataset if ts(item) > train_end]
    if not train:
        raise EmptySide(
            f"no samples at or before {format_timestamp(train_end)}", side="train"
        )
    if not validation:
        raise EmptySide(
            f"no samples after {format_timestamp(train_end)}", side="validation"
        )
    return train, validation
