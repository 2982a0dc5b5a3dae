"""End-to-end training: export, select features, mine sets, tune, fit.

This is the one code path used by both the CLI and the service retrain job,
so a model trained offline and one trained through the API are identical
given the same stored data.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .bayes import DEFAULT_BETA
from .cascade import (
    EnsembleConfig,
    GridReport,
    ModelArtifact,
    cross_validated_report,
    predict,
    train_ensemble,
    tune_grid,
)
from .errors import EmptyTrainingSet
from .evaluation import CVConfig, EvalReport, score, temporal_split
from .features import (
    DEFAULT_OAT_MIN_F1,
    DEFAULT_TARGET_F1,
    FeatureSelection,
    OatReport,
    RelevanceTable,
    ThresholdTuning,
    compute_relevance,
    oat_select,
    select_by_relevance,
    tune_threshold,
)
from .mining import (
    DEFAULT_MAX_LEN,
    DEFAULT_MIN_SUPPORT,
    EventSetFeature,
    mine_recurrent_sets,
    restrict_traces,
)
from .model import IncidentTrace
from .store import DataStore


@dataclass
class PipelineConfig:
    cv: CVConfig = field(default_factory=CVConfig)
    target_f1: float = DEFAULT_TARGET_F1
    oat_min_f1: float = DEFAULT_OAT_MIN_F1
    beta: float = DEFAULT_BETA
    max_len: int = DEFAULT_MAX_LEN
    min_support: int = DEFAULT_MIN_SUPPORT
    grid: Optional[tuple[EnsembleConfig, ...]] = None  # None means the default grid
    include_single_baselines: bool = True
    skip_oat: bool = False  # large fleets may skip the recovery pass


@dataclass
class TrainingResult:
    artifact: ModelArtifact
    features: tuple[EventSetFeature, ...]
    selection: FeatureSelection
    relevance: RelevanceTable
    tuning: ThresholdTuning
    oat_report: Optional[OatReport]
    grid_report: GridReport
    cv_report: EvalReport
    dataset_size: int
    timings: dict[str, float]
    version: Optional[int] = None


def run_training(
    store: DataStore,
    fleet: str,
    config: Optional[PipelineConfig] = None,
    until: Optional[int] = None,
    save: bool = True,
) -> TrainingResult:
    config = config or PipelineConfig()
    timings: dict[str, float] = {}
    started = time.monotonic()

    t0 = time.monotonic()
    traces = store.export_training_set(fleet, until=until)
    if not traces:
        raise EmptyTrainingSet(f"fleet {fleet!r} has no labeled incidents")
    timings["export_s"] = time.monotonic() - t0

    t0 = time.monotonic()
    relevance = compute_relevance(traces)
    tuning = tune_threshold(
        traces,
        config.cv,
        target_f1=config.target_f1,
        beta=config.beta,
        relevance=relevance,
    )
    selection = select_by_relevance(relevance, tuning.threshold)
    oat_report: Optional[OatReport] = None
    if not config.skip_oat:
        selection, oat_report = oat_select(
            traces,
            selection,
            config.cv,
            min_f1=config.oat_min_f1,
            beta=config.beta,
            relevance=relevance,
        )
    timings["selection_s"] = time.monotonic() - t0

    t0 = time.monotonic()
    restricted = restrict_traces(
        ((trace.incident.label, trace.codes) for trace in traces),
        selection.vocabulary,
    )
    features = tuple(
        mine_recurrent_sets(
            restricted, max_len=config.max_len, min_support=config.min_support
        )
    )
    timings["mining_s"] = time.monotonic() - t0

    t0 = time.monotonic()
    grid_report = tune_grid(
        traces,
        features,
        grids=list(config.grid) if config.grid else None,
        cv=config.cv,
        include_single_baselines=config.include_single_baselines,
        beta=config.beta,
    )
    timings["grid_s"] = time.monotonic() - t0

    t0 = time.monotonic()
    cv_report = cross_validated_report(traces, features, grid_report.best, cv=config.cv)
    artifact = train_ensemble(
        traces,
        features,
        grid_report.best,
        fleet=fleet,
        t_r=selection.t_r,
        fingerprint=store.training_fingerprint(fleet, until=until),
    )
    best_entry = next(
        e for e in grid_report.entries if e.config == grid_report.best
    )
    artifact.eval_summary = {
        "best_config": grid_report.best.label(),
        "windows": list(grid_report.best.windows),
        "cv_f1_weighted": best_entry.mean_f1,
        "cv_classified_fraction": best_entry.mean_classified_fraction,
        "cv_classified_count": best_entry.mean_classified_count,
        "cv_folds": config.cv.k,
        "n_incidents": len(traces),
        "n_features": len(features),
        "n_mined": sum(1 for f in features if f.origin == "mined"),
        "t_r": selection.t_r,
        "reached_target_f1": tuning.reached_target,
        "report": cv_report.to_dict(),
        "grid": grid_report.to_records(),
    }
    timings["fit_s"] = time.monotonic() - t0
    timings["total_s"] = time.monotonic() - started

    result = TrainingResult(
        artifact=artifact,
        features=features,
        selection=selection,
        relevance=relevance,
        tuning=tuning,
        oat_report=oat_report,
        grid_report=grid_report,
        cv_report=cv_report,
        dataset_size=len(traces),
        timings=timings,
    )
    if save:
        result.version = store.save_model(artifact)
        artifact.version = result.version
    return result


def evaluate_artifact(
    artifact: ModelArtifact, traces: Sequence[IncidentTrace]
) -> EvalReport:
    """Score the artifact's suggestions against the traces' own labels."""
    predictions = [predict(artifact, trace) for trace in traces]
    truth = {trace.incident.id: trace.incident.label for trace in traces}
    return score(predictions, truth)


def holdout_evaluation(
    store: DataStore,
    fleet: str,
    split: int,
    config: Optional[PipelineConfig] = None,
) -> tuple[TrainingResult, EvalReport]:
    """Train on incidents up to the split instant, score on the later ones."""
    traces = store.export_training_set(fleet)
    _, validation = temporal_split(traces, split)
    result = run_training(store, fleet, config=config, until=split, save=False)
    return result, evaluate_artifact(result.artifact, validation)
