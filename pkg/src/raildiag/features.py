"""Stage-1 event filtering: relevance metric, threshold tuning, OaT recovery.

An event's relevance is its best-class share of per-trace presence counts.
The retention threshold is tuned so a single-window classifier over the
retained codes reaches a target F1 under stratified cross-validation; events
discarded by the threshold get one more chance through the One-at-a-time
procedure, which admits any event that individually keeps F1 above a floor.
"""

from __future__ import annotations

from collections import namedtuple
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .bayes import DEFAULT_BETA, classify_window, fit_counts
from .errors import EmptyDataset
from .evaluation import CVConfig, fold_small_classes, score, stratified_folds
from .model import CLASS_ORDER, IncidentTrace, SubsystemClass

THRESHOLD_GRID_STEP = 0.01
DEFAULT_TARGET_F1 = 0.90
DEFAULT_OAT_MIN_F1 = 0.85

_Prediction = namedtuple("_Prediction", "incident_id predicted_class")


@dataclass(frozen=True)
class RelevanceEntry:
    code: str
    class_counts: dict[SubsystemClass, int]
    total: int
    relevance: float


@dataclass
class RelevanceTable:
    """Per-code class frequencies and the derived relevance score."""

    entries: dict[str, RelevanceEntry]

    def relevance(self, code: str) -> float:
        return self.entries[code].relevance

    def codes_at_least(self, threshold: float) -> set[str]:
        return {c for c, e in self.entries.items() if e.relevance >= threshold}

    def to_records(self) -> list[dict]:
        records = []
        for code in sorted(self.entries):
            entry = self.entries[code]
            records.append(
                {
                    "code": code,
                    "relevance": entry.relevance,
                    "total": entry.total,
                    "class_counts": {
                        cls.value: entry.class_counts.get(cls, 0) for cls in CLASS_ORDER
                    },
                }
            )
        return records


@dataclass
class FeatureSelection:
    """Outcome of stage 1: threshold-retained codes plus OaT recoveries."""

    retained_events: set[str]
    oat_events: set[str] = field(default_factory=set)
    t_r: float = 0.0
    provenance: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        overlap = self.retained_events & self.oat_events
        if overlap:
            raise ValueError(f"retained and OaT sets overlap: {sorted(overlap)[:5]}")

    @property
    def vocabulary(self) -> set[str]:
        return self.retained_events | self.oat_events

    def to_dict(self) -> dict:
        return {
            "t_r": self.t_r,
            "retained_events": sorted(self.retained_events),
            "oat_events": sorted(self.oat_events),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "FeatureSelection":
        retained = set(payload["retained_events"])
        oat = set(payload["oat_events"])
        provenance = {c: "relevance" for c in retained}
        provenance.update({c: "oat" for c in oat})
        return cls(
            retained_events=retained,
            oat_events=oat,
            t_r=float(payload["t_r"]),
            provenance=provenance,
        )


def compute_relevance(dataset: Sequence[IncidentTrace]) -> RelevanceTable:
    """Count per-trace presence of every code by class and derive relevance.

    A code counts once per incident trace no matter how often it bursts
    inside it; the trace is the widest (240 min) window.
    """
    if not dataset:
        raise EmptyDataset("relevance needs at least one labeled trace")
    counts: dict[str, dict[SubsystemClass, int]] = {}
    for trace in dataset:
        label = trace.incident.label
        if label is None:
            raise EmptyDataset(f"trace {trace.incident.id} is unlabeled")
        for code in set(trace.codes):
            bucket = counts.setdefault(code, {})
            bucket[label] = bucket.get(label, 0) + 1
    entries = {}
    for code, bucket in counts.items():
        total = sum(bucket.values())
        entries[code] = RelevanceEntry(
            code=code,
            class_counts=bucket,
            total=total,
            relevance=max(bucket.values()) / total,
        )
    return RelevanceTable(entries=entries)


@dataclass(frozen=True)
class ThresholdPoint:
    threshold: float
    f1: float
    classified_fraction: float
    vocab_size: int


@dataclass
class ThresholdTuning:
    threshold: float
    reached_target: bool
    target_f1: float
    curve: list[ThresholdPoint]

    def to_records(self) -> list[dict]:
        return [
            {
                "threshold": p.threshold,
                "f1": p.f1,
                "classified_fraction": p.classified_fraction,
                "vocab_size": p.vocab_size,
            }
            for p in self.curve
        ]


class _PresenceCV:
    """Shared scaffolding for stage-1 CV runs over per-trace code presence."""

    def __init__(self, dataset: Sequence[IncidentTrace], cv: CVConfig, beta: float):
        if not dataset:
            raise EmptyDataset("cannot cross-validate an empty dataset")
        self.presence = [frozenset(trace.codes) for trace in dataset]
        self.ids = [trace.incident.id for trace in dataset]
        raw_labels = [trace.incident.label for trace in dataset]
        self.labels = fold_small_classes(raw_labels, cv.k)
        self.folds = stratified_folds(self.labels, cv)
        self.beta = beta

    def evaluate(self, vocab: set[str]) -> tuple[float, float]:
        """Mean weighted F1 (classified-only) and mean classified fraction."""
        vocabulary = tuple(sorted(vocab))
        if not vocabulary:
            return 0.0, 0.0
        f1s, fractions = [], []
        for fold in self.folds:
            holdout = set(fold)
            train_idx = [i for i in range(len(self.presence)) if i not in holdout]
            windows = [self.presence[i] & vocab for i in train_idx]
            table = fit_counts(
                windows,
                [self.labels[i] for i in train_idx],
                beta=self.beta,
                vocabulary=vocabulary,
            )
            predictions, truth = [], {}
            for i in fold:
                decision = classify_window(table, self.presence[i] & vocab)
                predicted = decision[0] if decision else None
                predictions.append(_Prediction(self.ids[i], predicted))
                truth[self.ids[i]] = self.labels[i]
            report = score(predictions, truth)
            f1s.append(report.f1_weighted)
            fractions.append(report.classified_fraction)
        return sum(f1s) / len(f1s), sum(fractions) / len(fractions)


def tune_threshold(
    dataset: Sequence[IncidentTrace],
    cv: CVConfig,
    target_f1: float = DEFAULT_TARGET_F1,
    beta: float = DEFAULT_BETA,
    relevance: Optional[RelevanceTable] = None,
) -> ThresholdTuning:
    """Scan thresholds 0.00..1.00 (step 0.01) and keep the smallest one whose
    retained vocabulary reaches the target cross-validated F1.

    When no grid point reaches the target, the argmax-F1 threshold is returned
    flagged as best-effort.
    """
    relevance = relevance or compute_relevance(dataset)
    harness = _PresenceCV(dataset, cv, beta)

    grid = [round(i * THRESHOLD_GRID_STEP, 2) for i in range(101)]
    cache: dict[int, tuple[float, float]] = {}
    curve: list[ThresholdPoint] = []
    for t in grid:
        vocab = relevance.codes_at_least(t)
        key = len(vocab)  # same size implies same set for nested threshold cuts
        if key not in cache:
            cache[key] = harness.evaluate(vocab)
        f1, fraction = cache[key]
        curve.append(
            ThresholdPoint(
                threshold=t, f1=f1, classified_fraction=fraction, vocab_size=len(vocab)
            )
        )

    qualifying = [p for p in curve if p.f1 >= target_f1]
    if qualifying:
        chosen = min(qualifying, key=lambda p: p.threshold)
        return ThresholdTuning(
            threshold=chosen.threshold, reached_target=True, target_f1=target_f1, curve=curve
        )
    best = max(curve, key=lambda p: (p.f1, -p.threshold))
    return ThresholdTuning(
        threshold=best.threshold, reached_target=False, target_f1=target_f1, curve=curve
    )


def select_by_relevance(relevance: RelevanceTable, t_r: float) -> FeatureSelection:
    retained = relevance.codes_at_least(t_r)
    return FeatureSelection(
        retained_events=retained,
        t_r=t_r,
        provenance={c: "relevance" for c in retained},
    )


@dataclass(frozen=True)
class OatCandidate:
    code: str
    relevance: float
    f1: float
    classified_fraction: float
    admitted: bool


@dataclass
class OatReport:
    min_f1: float
    candidates: list[OatCandidate]

    def to_records(self) -> list[dict]:
        return [
            {
                "code": c.code,
                "relevance": c.relevance,
                "f1": c.f1,
                "classified_fraction": c.classified_fraction,
                "admitted": c.admitted,
            }
            for c in self.candidates
        ]


def oat_select(
    dataset: Sequence[IncidentTrace],
    selection: FeatureSelection,
    cv: CVConfig,
    min_f1: float = DEFAULT_OAT_MIN_F1,
    beta: float = DEFAULT_BETA,
    relevance: Optional[RelevanceTable] = None,
) -> tuple[FeatureSelection, OatReport]:
    """Re-admit discarded events one at a time.

    Each candidate is evaluated independently against the retained base set
    (never cumulatively), so evaluation order cannot change the result.
    """
    relevance = relevance or compute_relevance(dataset)
    harness = _PresenceCV(dataset, cv, beta)
    base = set(selection.retained_events)

    discarded = sorted(
        code for code in relevance.entries if code not in base
    )
    candidates: list[OatCandidate] = []
    admitted: set[str] = set()
    for code in discarded:
        f1, fraction = harness.evaluate(base | {code})
        ok = f1 >= min_f1
        if ok:
            admitted.add(code)
        candidates.append(
            OatCandidate(
                code=code,
                relevance=relevance.relevance(code),
                f1=f1,
                classified_fraction=fraction,
                admitted=ok,
            )
        )

    provenance = dict(selection.provenance)
    provenance.update({c: "oat" for c in admitted})
    augmented = FeatureSelection(
        retained_events=base,
        oat_events=admitted,
        t_r=selection.t_r,
        provenance=provenance,
    )
    return augmented, OatReport(min_f1=min_f1, candidates=candidates)


def build_selection(
    dataset: Sequence[IncidentTrace],
    cv: CVConfig,
    target_f1: float = DEFAULT_TARGET_F1,
    oat_min_f1: float = DEFAULT_OAT_MIN_F1,
    beta: float = DEFAULT_BETA,
) -> tuple[FeatureSelection, RelevanceTable, ThresholdTuning, OatReport]:
    """Full stage 1: relevance, threshold tuning, then OaT recovery."""
    relevance = compute_relevance(dataset)
    tuning = tune_threshold(
        dataset, cv, target_f1=target_f1, beta=beta, relevance=relevance
    )
    selection = select_by_relevance(relevance, tuning.threshold)
    augmented, oat_report = oat_select(
        dataset, selection, cv, min_f1=oat_min_f1, beta=beta, relevance=relevance
    )
    return augmented, relevance, tuning, oat_report


def selection_report_records(
    relevance: RelevanceTable,
    selection: FeatureSelection,
    oat_report: Optional[OatReport] = None,
) -> list[dict]:
    """Combined tabular export: counts, relevance, decision, OaT metrics."""
    oat_by_code = {}
    if oat_report:
        oat_by_code = {c.code: c for c in oat_report.candidates}
    records = []
    for record in relevance.to_records():
        code = record["code"]
        decision = selection.provenance.get(code, "discarded")
        oat = oat_by_code.get(code)
        records.append(
            {
                **record,
                "decision": decision,
                "oat_f1": oat.f1 if oat else None,
                "oat_classified_fraction": oat.classified_fraction if oat else None,
            }
        )
    return records
