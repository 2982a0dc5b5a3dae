"""Fault diagnostics for vehicle incident event streams.

The pipeline: select discriminative event codes by relevance with a
one-at-a-time recovery pass, mine recurrent ordered event sets per class,
fit one smoothed count-based classifier per lookback window, and cascade
the windows nearest-first at prediction time. Storage, an HTTP service and
the railctl CLI wrap the library for desk-scale operation.
"""

from .bayes import DEFAULT_BETA, CountTable, classify_window, fit_counts, likelihood
from .cascade import (
    GRID_WINDOW_SEQUENCE,
    EnsembleConfig,
    GridReport,
    ModelArtifact,
    Suggestion,
    WindowFeatureExtractor,
    cross_validated_report,
    predict,
    single_window_grid,
    table1_ensemble_grid,
    train_ensemble,
    tune_grid,
)
from .errors import RailDiagError
from .evaluation import (
    UNCLASSIFIED,
    CVConfig,
    EvalReport,
    fold_small_classes,
    score,
    stratified_folds,
    temporal_split,
)
from .features import (
    DEFAULT_OAT_MIN_F1,
    DEFAULT_TARGET_F1,
    FeatureSelection,
    OatReport,
    RelevanceTable,
    ThresholdTuning,
    build_selection,
    compute_relevance,
    oat_select,
    select_by_relevance,
    tune_threshold,
)
from .mining import (
    DEFAULT_MAX_LEN,
    DEFAULT_MIN_SUPPORT,
    EventSetFeature,
    denoise,
    is_subsequence,
    lcss,
    match_features,
    mine_recurrent_sets,
    restrict_traces,
)
from .model import (
    CLASS_ORDER,
    MAX_WINDOW_MINUTES,
    Event,
    Incident,
    IncidentTrace,
    SubsystemClass,
    WindowSpec,
    build_trace,
    parse_timestamp,
    slice_trace,
    validate_event,
    validate_incident,
)
from .pipeline import (
    PipelineConfig,
    TrainingResult,
    evaluate_artifact,
    holdout_evaluation,
    run_training,
)
from .store import DataStore, FeedbackRecord
from .synth import (
    FleetSpec,
    GeneratedFleet,
    GroundTruth,
    SignatureSpec,
    default_fleet_spec,
    generate,
)

__version__ = "0.1.0"

__all__ = [
    "CLASS_ORDER",
    "CVConfig",
    "CountTable",
    "DEFAULT_BETA",
    "DEFAULT_MAX_LEN",
    "DEFAULT_MIN_SUPPORT",
    "DEFAULT_OAT_MIN_F1",
    "DEFAULT_TARGET_F1",
    "DataStore",
    "EnsembleConfig",
    "EvalReport",
    "Event",
    "EventSetFeature",
    "FeatureSelection",
    "FeedbackRecord",
    "FleetSpec",
    "GRID_WINDOW_SEQUENCE",
    "GeneratedFleet",
    "GridReport",
    "GroundTruth",
    "Incident",
    "IncidentTrace",
    "MAX_WINDOW_MINUTES",
    "ModelArtifact",
    "OatReport",
    "PipelineConfig",
    "RailDiagError",
    "RelevanceTable",
    "SignatureSpec",
    "SubsystemClass",
    "Suggestion",
    "ThresholdTuning",
    "TrainingResult",
    "UNCLASSIFIED",
    "WindowFeatureExtractor",
    "WindowSpec",
    "build_selection",
    "build_trace",
    "classify_window",
    "compute_relevance",
    "cross_validated_report",
    "default_fleet_spec",
    "denoise",
    "evaluate_artifact",
    "fit_counts",
    "fold_small_classes",
    "generate",
    "holdout_evaluation",
    "is_subsequence",
    "lcss",
    "likelihood",
    "match_features",
    "mine_recurrent_sets",
    "oat_select",
    "parse_timestamp",
    "predict",
    "restrict_traces",
    "run_training",
    "score",
    "select_by_relevance",
    "single_window_grid",
    "slice_trace",
    "stratified_folds",
    "table1_ensemble_grid",
    "temporal_split",
    "train_ensemble",
    "tune_grid",
    "tune_threshold",
    "validate_event",
    "validate_incident",
]
