"""Error taxonomy shared across the package.

Every domain failure raises a subclass of :class:`RailDiagError` so the CLI
and the HTTP service can map them uniformly (exit code 1, structured JSON
error bodies).
"""

from __future__ import annotations


class RailDiagError(Exception):
    """Base class for all domain errors."""

    code = "error"

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self) -> dict:
        return {"code": self.code, "message": self.message, "details": self.details}


# --- record validation -------------------------------------------------------

class MissingField(RailDiagError):
    code = "missing_field"


class UnparseableTimestamp(RailDiagError):
    code = "unparseable_timestamp"


class EmptyCode(RailDiagError):
    code = "empty_code"


class UnknownClass(RailDiagError):
    code = "unknown_class"


# --- training / evaluation ----------------------------------------------------

class EmptyDataset(RailDiagError):
    code = "empty_dataset"


class EmptyTrainingSet(RailDiagError):
    code = "empty_training_set"


class NonPositiveSmoothing(RailDiagError):
    code = "non_positive_smoothing"


class UnknownFeature(RailDiagError):
    code = "unknown_feature"


class ClassTooSmall(RailDiagError):
    code = "class_too_small"


class IdMismatch(RailDiagError):
    code = "id_mismatch"


class EmptySide(RailDiagError):
    code = "empty_side"


class InvalidSpec(RailDiagError):
    code = "invalid_spec"


# --- storage ------------------------------------------------------------------

class DuplicateIncidentId(RailDiagError):
    code = "duplicate_incident_id"


class UnknownIncident(RailDiagError):
    code = "unknown_incident"


class StorageFailure(RailDiagError):
    code = "storage_failure"


class VersionNotFound(RailDiagError):
    code = "version_not_found"


class RetrainInProgress(RailDiagError):
    code = "retrain_in_progress"
