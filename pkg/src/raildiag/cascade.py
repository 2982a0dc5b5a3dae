"""Cascaded time-window naive Bayes ensemble and its grid tuning.

One classifier is fitted per lookback window, all windows anchored at the
incident instant and nested by default (each window extends the previous
one further into the past). At prediction time the windows are consulted
nearest-first and the first classifier that answers fixes the output; when
none answers the incident stays unclassified.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, replace
from typing import Optional, Sequence

from .bayes import DEFAULT_BETA, CountTable, classify_window, fit_counts
from .errors import EmptyTrainingSet
from .evaluation import CVConfig, EvalReport, fold_small_classes, score, stratified_folds
from .mining import EventSetFeature, FeatureMatcher, denoise
from .model import (
    MAX_WINDOW_MINUTES,
    IncidentTrace,
    SubsystemClass,
    TraceWindows,
    WindowSpec,
)

SCHEMA_VERSION = 1

# Window grid explored for ensembles; the ensemble candidates are its prefixes
# and the single-window baselines its individual entries.
GRID_WINDOW_SEQUENCE = (5, 10, 15, 20, 25, 30, 40, 60, 90, 120, 240)


@dataclass(frozen=True)
class EnsembleConfig:
    windows: tuple[int, ...]
    beta: float = DEFAULT_BETA
    nested: bool = True

    def __post_init__(self):
        if not self.windows:
            raise ValueError("ensemble needs at least one window")
        if any(w2 <= w1 for w1, w2 in zip(self.windows, self.windows[1:])):
            raise ValueError(f"windows must be strictly increasing: {self.windows}")
        if self.windows[-1] > MAX_WINDOW_MINUTES:
            raise ValueError(
                f"largest window exceeds the {MAX_WINDOW_MINUTES} min cap: {self.windows}"
            )

    @property
    def max_window(self) -> int:
        return self.windows[-1]

    def label(self) -> str:
        return "[" + ",".join(str(w) for w in self.windows) + "]"

    def to_dict(self) -> dict:
        return {"windows": list(self.windows), "beta": self.beta, "nested": self.nested}

    @classmethod
    def from_dict(cls, payload: dict) -> "EnsembleConfig":
        return cls(
            windows=tuple(payload["windows"]),
            beta=float(payload["beta"]),
            nested=bool(payload.get("nested", True)),
        )


def table1_ensemble_grid(beta: float = DEFAULT_BETA, nested: bool = True) -> list[EnsembleConfig]:
    """The default tuning grid: every prefix of the window sequence."""
    return [
        EnsembleConfig(windows=GRID_WINDOW_SEQUENCE[: i + 1], beta=beta, nested=nested)
        for i in range(len(GRID_WINDOW_SEQUENCE))
    ]


def single_window_grid(beta: float = DEFAULT_BETA) -> list[EnsembleConfig]:
    """Single-classifier baselines over the same window sizes."""
    return [EnsembleConfig(windows=(w,), beta=beta) for w in GRID_WINDOW_SEQUENCE]


@dataclass(frozen=True)
class Suggestion:
    """Prediction for one incident, with the matched sets as explanation."""

    incident_id: str
    outcome: str  # "classified" | "unclassified"
    predicted_class: Optional[SubsystemClass] = None
    answered_window_index: Optional[int] = None
    answered_window_minutes: Optional[int] = None
    matched_features: tuple[tuple[str, ...], ...] = ()
    log_score: Optional[float] = None
    model_version: Optional[int] = None
    produced_at: Optional[int] = None

    def __post_init__(self):
        if self.outcome == "classified" and not self.matched_features:
            raise ValueError("a classified suggestion must carry matched features")

    def to_dict(self) -> dict:
        return {
            "incident_id": self.incident_id,
            "outcome": self.outcome,
            "predicted_class": self.predicted_class.value if self.predicted_class else None,
            "answered_window_index": self.answered_window_index,
            "answered_window_minutes": self.answered_window_minutes,
            "matched_features": [list(codes) for codes in self.matched_features],
            "log_score": self.log_score,
            "model_version": self.model_version,
            "produced_at": self.produced_at,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "Suggestion":
        predicted = payload.get("predicted_class")
        return cls(
            incident_id=payload["incident_id"],
            outcome=payload["outcome"],
            predicted_class=SubsystemClass(predicted) if predicted else None,
            answered_window_index=payload.get("answered_window_index"),
            answered_window_minutes=payload.get("answered_window_minutes"),
            matched_features=tuple(
                tuple(codes) for codes in payload.get("matched_features", [])
            ),
            log_score=payload.get("log_score"),
            model_version=payload.get("model_version"),
            produced_at=payload.get("produced_at"),
        )


class WindowFeatureExtractor:
    """Per-window present-feature sets for one feature vocabulary."""

    def __init__(
        self,
        features: Sequence[EventSetFeature],
        windows: Sequence[int],
        nested: bool = True,
    ):
        self.features = tuple(features)
        self.windows = tuple(windows)
        self.nested = nested
        self._matcher = FeatureMatcher(self.features)
        self._specs = [WindowSpec(w) for w in self.windows]

    def extract(self, trace: IncidentTrace) -> list[frozenset[int]]:
        """Present feature ids per window, nearest window first."""
        view = TraceWindows(trace)
        presence: list[frozenset[int]] = []
        previous_codes: Optional[list[str]] = None
        previous_presence: frozenset[int] = frozenset()
        for k, spec in enumerate(self._specs):
            if self.nested:
                codes = view.codes_in_window(spec)
            else:
                inner = self._specs[k - 1] if k > 0 else None
                codes = view.codes_in_band(spec, inner)
            if previous_codes is not None and codes == previous_codes:
                presence.append(previous_presence)
                continue
            matched = self._matcher.match(denoise(codes))
            presence.append(matched)
            previous_codes, previous_presence = codes, matched
        return presence


@dataclass
class ModelArtifact:
    """Immutable trained ensemble: vocabulary, per-window tables, metadata."""

    fleet: str
    config: EnsembleConfig
    vocabulary: tuple[EventSetFeature, ...]
    tables: tuple[CountTable, ...]
    t_r: float
    beta: float
    fingerprint: dict
    created_at: int
    eval_summary: Optional[dict] = None
    version: Optional[int] = None
    schema_version: int = SCHEMA_VERSION

    def with_version(self, version: int) -> "ModelArtifact":
        return replace(self, version=version)

    def extractor(self) -> WindowFeatureExtractor:
        return WindowFeatureExtractor(
            self.vocabulary, self.config.windows, nested=self.config.nested
        )

    def content_hash(self) -> str:
        payload = {
            "config": self.config.to_dict(),
            "t_r": self.t_r,
            "beta": self.beta,
            "vocabulary": [f.to_record() for f in self.vocabulary],
            "tables": [t.to_dict() for t in self.tables],
            "fingerprint": self.fingerprint,
        }
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "fleet": self.fleet,
            "version": self.version,
            "created_at": self.created_at,
            "config": self.config.to_dict(),
            "t_r": self.t_r,
            "beta": self.beta,
            "vocabulary": [f.to_record() for f in self.vocabulary],
            "tables": [t.to_dict() for t in self.tables],
            "fingerprint": self.fingerprint,
            "eval_summary": self.eval_summary,
            "content_hash": self.content_hash(),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "ModelArtifact":
        vocabulary = tuple(
            EventSetFeature.from_record(f) for f in payload["vocabulary"]
        )
        ids = tuple(range(len(vocabulary)))
        return cls(
            fleet=payload["fleet"],
            config=EnsembleConfig.from_dict(payload["config"]),
            vocabulary=vocabulary,
            tables=tuple(
                CountTable.from_dict(t, vocabulary=ids) for t in payload["tables"]
            ),
            t_r=float(payload["t_r"]),
            beta=float(payload["beta"]),
            fingerprint=payload["fingerprint"],
            created_at=int(payload["created_at"]),
            eval_summary=payload.get("eval_summary"),
            version=payload.get("version"),
            schema_version=int(payload.get("schema_version", SCHEMA_VERSION)),
        )


def fit_tables_from_presence(
    presence: Sequence[Sequence[frozenset[int]]],
    labels: Sequence[SubsystemClass],
    n_windows: int,
    n_features: int,
    beta: float,
) -> tuple[CountTable, ...]:
    """One count table per window from cached present-feature sets."""
    if not presence:
        raise EmptyTrainingSet("no training incidents")
    ids = tuple(range(n_features))
    tables = []
    for k in range(n_windows):
        tables.append(
            fit_counts(
                [sample[k] for sample in presence],
                labels,
                beta=beta,
                vocabulary=ids,
            )
        )
    return tuple(tables)


def train_ensemble(
    dataset: Sequence[IncidentTrace],
    vocabulary: Sequence[EventSetFeature],
    config: EnsembleConfig,
    fleet: str = "",
    t_r: float = 0.0,
    fingerprint: Optional[dict] = None,
) -> ModelArtifact:
    """Fit one classifier per window over the training traces."""
    if not dataset:
        raise EmptyTrainingSet("no training incidents")
    labels = []
    for trace in dataset:
        if trace.incident.label is None:
            raise EmptyTrainingSet(f"trace {trace.incident.id} is unlabeled")
        labels.append(trace.incident.label)
    extractor = WindowFeatureExtractor(vocabulary, config.windows, nested=config.nested)
    presence = [extractor.extract(trace) for trace in dataset]
    tables = fit_tables_from_presence(
        presence, labels, len(config.windows), len(vocabulary), config.beta
    )
    return ModelArtifact(
        fleet=fleet,
        config=config,
        vocabulary=tuple(vocabulary),
        tables=tables,
        t_r=t_r,
        beta=config.beta,
        fingerprint=fingerprint or {},
        created_at=int(time.time() * 1000),
    )


def predict_from_presence(
    artifact: ModelArtifact,
    incident_id: str,
    presence: Sequence[frozenset[int]],
    produced_at: Optional[int] = None,
) -> Suggestion:
    """Cascade decision over precomputed per-window presence sets."""
    for k, present in enumerate(presence):
        decision = classify_window(artifact.tables[k], present)
        if decision is None:
            continue
        cls, log_score = decision
        matched = tuple(
            artifact.vocabulary[i].codes for i in sorted(present)
        )
        return Suggestion(
            incident_id=incident_id,
            outcome="classified",
            predicted_class=cls,
            answered_window_index=k,
            answered_window_minutes=artifact.config.windows[k],
            matched_features=matched,
            log_score=log_score,
            model_version=artifact.version,
            produced_at=produced_at,
        )
    return Suggestion(
        incident_id=incident_id,
        outcome="unclassified",
        model_version=artifact.version,
        produced_at=produced_at,
    )


def predict(
    artifact: ModelArtifact,
    trace: IncidentTrace,
    produced_at: Optional[int] = None,
) -> Suggestion:
    """Nearest window first; the first classifier that answers fixes the output."""
    presence = artifact.extractor().extract(trace)
    return predict_from_presence(
        artifact, trace.incident.id, presence, produced_at=produced_at
    )


@dataclass(frozen=True)
class GridEntry:
    config: EnsembleConfig
    kind: str  # "ensemble" | "single"
    mean_f1: float
    mean_classified_count: float
    mean_classified_fraction: float

    def to_record(self) -> dict:
        return {
            "config": self.config.label(),
            "kind": self.kind,
            "max_window": self.config.max_window,
            "n_windows": len(self.config.windows),
            "mean_f1": self.mean_f1,
            "mean_classified_count": self.mean_classified_count,
            "mean_classified_fraction": self.mean_classified_fraction,
        }


@dataclass
class GridReport:
    entries: list[GridEntry]
    best: EnsembleConfig

    def to_records(self) -> list[dict]:
        return [e.to_record() for e in self.entries]


def tune_grid(
    dataset: Sequence[IncidentTrace],
    vocabulary: Sequence[EventSetFeature],
    grids: Optional[Sequence[EnsembleConfig]] = None,
    cv: CVConfig = CVConfig(),
    include_single_baselines: bool = True,
    beta: float = DEFAULT_BETA,
) -> GridReport:
    """Cross-validate every candidate config and pick the best ensemble.

    Best = highest mean F1, ties resolved by higher mean classified count,
    then by smaller max window. Single-window baselines are evaluated and
    reported alongside but never selected.
    """
    if grids is None:
        grids = table1_ensemble_grid(beta=beta)
    if not grids:
        raise ValueError("need at least one candidate config")
    if not dataset:
        raise EmptyTrainingSet("no incidents to tune on")

    labels = fold_small_classes(
        [trace.incident.label for trace in dataset], cv.k
    )
    ids = [trace.incident.id for trace in dataset]
    folds = stratified_folds(labels, cv)

    candidates: list[tuple[EnsembleConfig, str]] = [(c, "ensemble") for c in grids]
    if include_single_baselines:
        seen = {c.windows for c in grids}
        for single in single_window_grid(beta=beta):
            kind = "single"
            if single.windows in seen:
                continue
            candidates.append((single, kind))

    # All candidates share nested windows, so presence per distinct window
    # length is computed once and reused across configs and folds.
    nested_only = all(config.nested for config, _ in candidates)
    all_windows = sorted({w for config, _ in candidates for w in config.windows})
    cache: dict[int, list[frozenset[int]]] = {}
    if nested_only:
        extractor = WindowFeatureExtractor(vocabulary, all_windows, nested=True)
        per_incident = [extractor.extract(trace) for trace in dataset]
        for pos, w in enumerate(all_windows):
            cache[w] = [per_incident[i][pos] for i in range(len(dataset))]

    entries: list[GridEntry] = []
    for config, kind in candidates:
        if nested_only:
            presence = [
                [cache[w][i] for w in config.windows] for i in range(len(dataset))
            ]
        else:
            extractor = WindowFeatureExtractor(
                vocabulary, config.windows, nested=config.nested
            )
            presence = [extractor.extract(trace) for trace in dataset]

        f1s, counts, fractions = [], [], []
        for fold in folds:
            holdout = set(fold)
            train_idx = [i for i in range(len(dataset)) if i not in holdout]
            tables = fit_tables_from_presence(
                [presence[i] for i in train_idx],
                [labels[i] for i in train_idx],
                len(config.windows),
                len(vocabulary),
                config.beta,
            )
            probe = ModelArtifact(
                fleet="",
                config=config,
                vocabulary=tuple(vocabulary),
                tables=tables,
                t_r=0.0,
                beta=config.beta,
                fingerprint={},
                created_at=0,
            )
            predictions = [
                predict_from_presence(probe, ids[i], presence[i]) for i in fold
            ]
            truth = {ids[i]: labels[i] for i in fold}
            report = score(predictions, truth)
            f1s.append(report.f1_weighted)
            counts.append(report.classified_count)
            fractions.append(report.classified_fraction)
        entries.append(
            GridEntry(
                config=config,
                kind=kind,
                mean_f1=sum(f1s) / len(f1s),
                mean_classified_count=sum(counts) / len(counts),
                mean_classified_fraction=sum(fractions) / len(fractions),
            )
        )

    ensemble_entries = [e for e in entries if e.kind == "ensemble"]
    best = max(
        ensemble_entries,
        key=lambda e: (e.mean_f1, e.mean_classified_count, -e.config.max_window),
    )
    return GridReport(entries=entries, best=best.config)


def cross_validated_report(
    dataset: Sequence[IncidentTrace],
    vocabulary: Sequence[EventSetFeature],
    config: EnsembleConfig,
    cv: CVConfig = CVConfig(),
) -> EvalReport:
    """Pooled holdout predictions over all folds, scored once.

    This is the evaluation stored with a trained model when no temporal
    holdout exists: every incident is predicted exactly once, by the fold
    model that did not see it.
    """
    if not dataset:
        raise EmptyTrainingSet("no incidents to evaluate")
    labels = fold_small_classes(
        [trace.incident.label for trace in dataset], cv.k
    )
    ids = [trace.incident.id for trace in dataset]
    folds = stratified_folds(labels, cv)
    extractor = WindowFeatureExtractor(
        vocabulary, config.windows, nested=config.nested
    )
    presence = [extractor.extract(trace) for trace in dataset]

    predictions = []
    truth = {}
    for fold in folds:
        holdout = set(fold)
        train_idx = [i for i in range(len(dataset)) if i not in holdout]
        tables = fit_tables_from_presence(
            [presence[i] for i in train_idx],
            [labels[i] for i in train_idx],
            len(config.windows),
            len(vocabulary),
            config.beta,
        )
        probe = ModelArtifact(
            fleet="",
            config=config,
            vocabulary=tuple(vocabulary),
            tables=tables,
            t_r=0.0,
            beta=config.beta,
            fingerprint={},
            created_at=0,
        )
        for i in fold:
            predictions.append(predict_from_presence(probe, ids[i], presence[i]))
            truth[ids[i]] = labels[i]
    return score(predictions, truth)
