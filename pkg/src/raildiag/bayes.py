"""Single-window smoothed naive Bayes over discrete event-set features.

Features are Bernoulli presences of event sets inside one time window. The
per-class likelihood of feature i is

    (card(i|c) + beta) / (n * beta + sum_i card(i|c))

which sums to exactly 1 over the vocabulary, so the smoothing never leaks
probability mass. A window classifier *answers* only when at least one
vocabulary feature is present; otherwise it abstains and the cascade moves on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Iterable, Optional, Sequence

import numpy as np

from .errors import (
    EmptyTrainingSet,
    NonPositiveSmoothing,
    UnknownClass,
    UnknownFeature,
)
from .model import CLASS_ORDER, SubsystemClass

DEFAULT_BETA = 0.01

_CLASS_RANK = {cls: i for i, cls in enumerate(CLASS_ORDER)}


@dataclass
class CountTable:
    """Per-class presence counts plus priors for one window classifier."""

    vocabulary: tuple[Hashable, ...]
    classes: tuple[SubsystemClass, ...]
    prior_counts: np.ndarray  # (n_classes,) int64
    cards: np.ndarray  # (n_classes, n_features) int64
    beta: float

    def __post_init__(self):
        self._index = {key: i for i, key in enumerate(self.vocabulary)}
        self._class_index = {cls: j for j, cls in enumerate(self.classes)}
        totals = self.cards.sum(axis=1)
        self._log_priors = np.log(self.prior_counts / self.prior_counts.sum())
        self._log_denoms = np.log(len(self.vocabulary) * self.beta + totals)
        self._log_cards = np.log(self.cards + self.beta)

    @property
    def n(self) -> int:
        return len(self.vocabulary)

    def feature_index(self, feature: Hashable) -> int:
        try:
            return self._index[feature]
        except KeyError:
            raise UnknownFeature(f"feature {feature!r} not in vocabulary") from None

    def card(self, feature: Hashable, cls: SubsystemClass) -> int:
        if cls not in self._class_index:
            raise UnknownClass(f"class {cls} not in table", value=str(cls))
        return int(self.cards[self._class_index[cls], self.feature_index(feature)])

    def prior(self, cls: SubsystemClass) -> float:
        if cls not in self._class_index:
            raise UnknownClass(f"class {cls} not in table", value=str(cls))
        return float(self.prior_counts[self._class_index[cls]] / self.prior_counts.sum())

    def to_dict(self) -> dict:
        return {
            "classes": [c.value for c in self.classes],
            "prior_counts": self.prior_counts.tolist(),
            "cards": self.cards.tolist(),
            "beta": self.beta,
            "n": self.n,
        }

    @classmethod
    def from_dict(cls, payload: dict, vocabulary: tuple[Hashable, ...]) -> "CountTable":
        return cls(
            vocabulary=vocabulary,
            classes=tuple(SubsystemClass(c) for c in payload["classes"]),
            prior_counts=np.asarray(payload["prior_counts"], dtype=np.int64),
            cards=np.asarray(payload["cards"], dtype=np.int64),
            beta=float(payload["beta"]),
        )


def fit_counts(
    windows: Sequence[Iterable[Hashable]],
    labels: Sequence[SubsystemClass],
    beta: float = DEFAULT_BETA,
    vocabulary: Optional[Sequence[Hashable]] = None,
) -> CountTable:
    """Count feature presences per class.

    ``windows`` holds one present-feature set per training incident. The
    vocabulary defaults to the sorted union of all present features; pass it
    explicitly when features absent everywhere must still occupy probability
    mass.
    """
    if len(windows) != len(labels):
        raise ValueError("windows and labels must align")
    if not windows:
        raise EmptyTrainingSet("no training windows")
    if beta <= 0:
        raise NonPositiveSmoothing(f"smoothing must be positive, got {beta}")

    if vocabulary is None:
        union = set()
        for present in windows:
            union.update(present)
        vocabulary = tuple(sorted(union))
    else:
        vocabulary = tuple(vocabulary)
    index = {key: i for i, key in enumerate(vocabulary)}

    classes = tuple(
        sorted(set(labels), key=lambda c: _CLASS_RANK[c])
    )
    class_index = {cls: j for j, cls in enumerate(classes)}

    prior_counts = np.zeros(len(classes), dtype=np.int64)
    cards = np.zeros((len(classes), len(vocabulary)), dtype=np.int64)
    for present, label in zip(windows, labels):
        j = class_index[label]
        prior_counts[j] += 1
        for feature in set(present):
            i = index.get(feature)
            if i is not None:
                cards[j, i] += 1
    return CountTable(
        vocabulary=vocabulary,
        classes=classes,
        prior_counts=prior_counts,
        cards=cards,
        beta=beta,
    )


def likelihood(table: CountTable, feature: Hashable, cls: SubsystemClass) -> float:
    """Smoothed probability of one feature given one class; strictly positive."""
    i = table.feature_index(feature)
    if cls not in table._class_index:
        raise UnknownClass(f"class {cls} not in table", value=str(cls))
    j = table._class_index[cls]
    total = int(table.cards[j].sum())
    return (int(table.cards[j, i]) + table.beta) / (table.n * table.beta + total)


def classify_window(
    table: CountTable, present: Iterable[Hashable]
) -> Optional[tuple[SubsystemClass, float]]:
    """Argmax of the joint log posterior over present vocabulary features.

    Returns None when no present feature is in the vocabulary (the classifier
    does not answer). Ties break by class enumeration order, ETCS first.
    """
    idxs = sorted(
        {table._index[f] for f in present if f in table._index}
    )
    if not idxs:
        return None
    m = len(idxs)
    scores = (
        table._log_priors
        + table._log_cards[:, idxs].sum(axis=1)
        - m * table._log_denoms
    )
    best_j = 0
    for j in range(1, len(table.classes)):
        if scores[j] > scores[best_j]:
            best_j = j
    return table.classes[best_j], float(scores[best_j])
