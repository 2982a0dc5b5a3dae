"""HTTP façade over the library: ingestion, suggestions, feedback, retraining.

The service holds no model state of its own beyond an atomically swapped
reference to the latest loaded artifact per fleet; every response can be
reproduced by calling library functions on the store contents.
"""

from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Query, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .cascade import ModelArtifact, Suggestion, predict
from .errors import (
    RailDiagError,
    RetrainInProgress,
    VersionNotFound,
)
from .model import (
    MAX_WINDOW_MINUTES,
    Incident,
    SubsystemClass,
    WindowSpec,
    validate_event,
    validate_incident,
)
from .pipeline import PipelineConfig, run_training
from .store import DataStore, FeedbackRecord

API_PREFIX = "/api/v1"
QUEUE_STATUSES = ("classified", "unclassified", "disagreement", "confirmed")

_STATUS_BY_CODE = {
    "duplicate_incident_id": 409,
    "retrain_in_progress": 409,
    "unknown_incident": 404,
    "version_not_found": 404,
    "storage_failure": 500,
}


@dataclass
class ServiceConfig:
    data_dir: str
    default_fleet: str = "demo"
    cors_origins: tuple[str, ...] = ("*",)
    bearer_token: Optional[str] = None
    static_dir: Optional[str] = None
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)


def _now_ms() -> int:
    return int(time.time() * 1000)


class ModelCache:
    """Lock-free reads of an immutable artifact snapshot, atomic publish."""

    def __init__(self, store: DataStore):
        self._store = store
        self._lock = threading.Lock()
        self._models: dict[str, ModelArtifact] = {}

    def get(self, fleet: str) -> Optional[ModelArtifact]:
        with self._lock:
            artifact = self._models.get(fleet)
        if artifact is not None:
            return artifact
        try:
            loaded = self._store.load_model(fleet)
        except VersionNotFound:
            return None
        with self._lock:
            return self._models.setdefault(fleet, loaded)

    def publish(self, fleet: str, artifact: ModelArtifact) -> None:
        with self._lock:
            self._models[fleet] = artifact


@dataclass
class RetrainJob:
    id: str
    fleet: str
    status: str = "pending"  # pending | running | done | failed
    version: Optional[int] = None
    error: Optional[str] = None
    submitted_at: int = 0
    finished_at: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "fleet": self.fleet,
            "status": self.status,
            "version": self.version,
            "error": self.error,
            "submitted_at": self.submitted_at,
            "finished_at": self.finished_at,
        }


class JobRunner:
    """One retrain at a time per fleet; jobs run on daemon threads."""

    def __init__(self, store: DataStore, cache: ModelCache, config: PipelineConfig):
        self._store = store
        self._cache = cache
        self._config = config
        self._lock = threading.Lock()
        self._jobs: dict[str, RetrainJob] = {}
        self._active: set[str] = set()

    def submit(self, fleet: str) -> RetrainJob:
        with self._lock:
            if fleet in self._active:
                raise RetrainInProgress(
                    f"a retrain for fleet {fleet!r} is already running", fleet=fleet
                )
            job = RetrainJob(
                id=uuid.uuid4().hex, fleet=fleet, submitted_at=_now_ms()
            )
            self._jobs[job.id] = job
            self._active.add(fleet)
        thread = threading.Thread(target=self._run, args=(job,), daemon=True)
        thread.start()
        return job

    def get(self, job_id: str) -> Optional[RetrainJob]:
        with self._lock:
            return self._jobs.get(job_id)

    def _run(self, job: RetrainJob) -> None:
        job.status = "running"
        try:
            result = run_training(
                self._store, job.fleet, config=self._config, save=True
            )
            # Serve exactly what was persisted, then swap in one assignment.
            published = self._store.load_model(job.fleet, result.version)
            self._cache.publish(job.fleet, published)
            job.version = result.version
            job.status = "done"
        except RailDiagError as exc:
            job.status = "failed"
            job.error = f"{exc.code}: {exc.message}"
        except Exception as exc:  # job must never take the service down
            job.status = "failed"
            job.error = f"internal: {exc}"
        finally:
            job.finished_at = _now_ms()
            with self._lock:
                self._active.discard(job.fleet)


def _incident_status(
    incident: Incident,
    suggestion: Optional[Suggestion],
    has_feedback: bool,
) -> str:
    if has_feedback:
        return "confirmed"
    if suggestion is not None and suggestion.outcome == "classified":
        if incident.label is None:
            return "classified"
        if incident.label is suggestion.predicted_class:
            return "confirmed"
        return "disagreement"
    return "unclassified"


def _error_response(exc: RailDiagError) -> JSONResponse:
    return JSONResponse(
        status_code=_STATUS_BY_CODE.get(exc.code, 422), content=exc.to_dict()
    )


def create_app(config: ServiceConfig) -> FastAPI:
    store = DataStore(config.data_dir)
    cache = ModelCache(store)
    jobs = JobRunner(store, cache, config.pipeline)

    # Warm per-vehicle indexes and model snapshots so first-request latency
    # matches steady state.
    for fleet in store.fleets():
        store.event_count(fleet)
        cache.get(fleet)

    app = FastAPI(title="raildiag", version="1", docs_url=f"{API_PREFIX}/docs",
                  openapi_url=f"{API_PREFIX}/openapi.json")
    app.state.store = store
    app.state.cache = cache
    app.state.jobs = jobs
    app.state.config = config

    if config.cors_origins:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=list(config.cors_origins),
            allow_methods=["*"],
            allow_headers=["*"],
        )

    if config.bearer_token:
        expected = f"Bearer {config.bearer_token}"

        @app.middleware("http")
        async def check_token(request: Request, call_next):
            if request.url.path.startswith(API_PREFIX) and request.method != "OPTIONS":
                if request.headers.get("authorization") != expected:
                    return JSONResponse(
                        status_code=401,
                        content={
                            "code": "unauthorized",
                            "message": "missing or invalid bearer token",
                            "details": {},
                        },
                    )
            return await call_next(request)

    @app.exception_handler(RailDiagError)
    async def domain_error(request: Request, exc: RailDiagError):
        return _error_response(exc)

    def fleet_or_default(fleet: Optional[str]) -> str:
        return fleet or config.default_fleet

    def queue_item(fleet: str, incident: Incident) -> dict:
        suggestion = store.latest_suggestion(fleet, incident.id)
        has_feedback = bool(store.feedback_history(fleet, incident.id))
        effective = store.effective_labels(fleet).get(incident.id)
        return {
            "incident": incident.to_record(),
            "suggestion": suggestion.to_dict() if suggestion else None,
            "status": _incident_status(incident, suggestion, has_feedback),
            "effective_label": effective[0].value if effective else None,
            "effective_label_source": effective[1] if effective else None,
        }

    @app.get(f"{API_PREFIX}/health")
    def health():
        return {"status": "ok", "fleets": store.fleets()}

    @app.post(f"{API_PREFIX}/events:batch")
    async def ingest_events(request: Request, fleet: Optional[str] = Query(None)):
        fleet = fleet_or_default(fleet)
        try:
            body = await request.json()
        except Exception:
            body = None
        if not isinstance(body, list):
            return JSONResponse(
                status_code=400,
                content={
                    "code": "malformed_envelope",
                    "message": "body must be a JSON array of event records",
                    "details": {},
                },
            )
        accepted = []
        reasons = []
        for i, raw in enumerate(body):
            try:
                if not isinstance(raw, dict):
                    raise RailDiagError("event record must be an object")
                accepted.append(validate_event(raw))
            except RailDiagError as exc:
                reasons.append({"index": i, **exc.to_dict()})
        store.append_events(fleet, accepted)
        return {
            "accepted": len(accepted),
            "rejected": len(reasons),
            "reasons": reasons,
        }

    @app.post(f"{API_PREFIX}/incidents", status_code=201)
    async def declare_incident(request: Request, fleet: Optional[str] = Query(None)):
        raw = await request.json()
        if not isinstance(raw, dict):
            raise RailDiagError("incident record must be an object")
        fleet = raw.get("fleet") or fleet_or_default(fleet)
        raw.setdefault("fleet", fleet)
        incident = validate_incident(raw)
        artifact = cache.get(fleet)
        if artifact is None:
            return JSONResponse(
                status_code=503,
                content={
                    "code": "no_model",
                    "message": f"fleet {fleet!r} has no trained model yet",
                    "details": {"fleet": fleet},
                },
            )
        store.record_incident(fleet, incident)
        trace = store.trace(fleet, incident)
        suggestion = predict(artifact, trace, produced_at=_now_ms())
        store.record_suggestion(fleet, suggestion)
        has_feedback = bool(store.feedback_history(fleet, incident.id))
        return {
            "incident": incident.to_record(),
            "suggestion": suggestion.to_dict(),
            "status": _incident_status(incident, suggestion, has_feedback),
        }

    @app.get(f"{API_PREFIX}/incidents/{{incident_id}}/suggestion")
    def get_suggestion(incident_id: str, fleet: Optional[str] = Query(None)):
        fleet = fleet_or_default(fleet)
        incident = store.get_incident(fleet, incident_id)
        return queue_item(fleet, incident)

    @app.get(f"{API_PREFIX}/incidents/{{incident_id}}/trace")
    def get_trace(
        incident_id: str,
        fleet: Optional[str] = Query(None),
        window_minutes: int = Query(
            MAX_WINDOW_MINUTES, ge=1, le=MAX_WINDOW_MINUTES
        ),
    ):
        fleet = fleet_or_default(fleet)
        incident = store.get_incident(fleet, incident_id)
        trace = store.trace(fleet, incident, WindowSpec(window_minutes))
        return {
            "incident": incident.to_record(),
            "window_minutes": window_minutes,
            "events": [event.to_record() for event in trace.events],
        }

    @app.get(f"{API_PREFIX}/incidents")
    def incident_queue(
        fleet: Optional[str] = Query(None),
        status: Optional[str] = Query(None),
        limit: int = Query(50, ge=1, le=500),
        offset: int = Query(0, ge=0),
    ):
        fleet = fleet_or_default(fleet)
        if status is not None and status not in QUEUE_STATUSES:
            raise RailDiagError(
                f"status must be one of {', '.join(QUEUE_STATUSES)}",
                status=status,
            )
        incidents = store.incidents(fleet)
        incidents.sort(key=lambda i: (-i.timestamp, i.id))
        suggestions = store.suggestions(fleet)
        effective = store.effective_labels(fleet)
        with_feedback = {r.incident_id for r in store.feedback_history(fleet)}
        items = []
        for incident in incidents:
            suggestion = suggestions.get(incident.id)
            item_status = _incident_status(
                incident, suggestion, incident.id in with_feedback
            )
            if status is not None and item_status != status:
                continue
            entry = effective.get(incident.id)
            items.append(
                {
                    "incident": incident.to_record(),
                    "suggestion": suggestion.to_dict() if suggestion else None,
                    "status": item_status,
                    "effective_label": entry[0].value if entry else None,
                    "effective_label_source": entry[1] if entry else None,
                }
            )
        total = len(items)
        return {
            "items": items[offset : offset + limit],
            "total": total,
            "limit": limit,
            "offset": offset,
        }

    @app.post(f"{API_PREFIX}/incidents/{{incident_id}}/feedback")
    async def post_feedback(
        incident_id: str, request: Request, fleet: Optional[str] = Query(None)
    ):
        fleet = fleet_or_default(fleet)
        raw = await request.json()
        if not isinstance(raw, dict) or "label" not in raw:
            raise RailDiagError("feedback body must be an object with a label")
        incident = store.get_incident(fleet, incident_id)
        label = SubsystemClass.parse(raw["label"])
        prior = store.effective_labels(fleet).get(incident_id)
        suggestion = store.latest_suggestion(fleet, incident_id)
        record = FeedbackRecord(
            incident_id=incident_id,
            label=label,
            created_at=_now_ms(),
            prior_label=prior[0] if prior else None,
            model_suggestion=suggestion.predicted_class if suggestion else None,
            note=str(raw.get("note", "")),
        )
        rank = store.record_feedback(fleet, record)
        return {
            "incident_id": incident_id,
            "effective_label": label.value,
            "feedback_rank": rank,
            "status": _incident_status(incident, suggestion, True),
        }

    @app.post(f"{API_PREFIX}/models/retrain", status_code=202)
    def retrain(fleet: Optional[str] = Query(None)):
        fleet = fleet_or_default(fleet)
        job = jobs.submit(fleet)
        return job.to_dict()

    @app.get(f"{API_PREFIX}/jobs/{{job_id}}")
    def job_status(job_id: str):
        job = jobs.get(job_id)
        if job is None:
            return JSONResponse(
                status_code=404,
                content={
                    "code": "unknown_job",
                    "message": f"unknown job {job_id!r}",
                    "details": {"job_id": job_id},
                },
            )
        return job.to_dict()

    @app.get(f"{API_PREFIX}/models")
    def list_models(fleet: Optional[str] = Query(None)):
        fleet = fleet_or_default(fleet)
        return {
            "fleet": fleet,
            "latest": store.latest_version(fleet),
            "versions": store.list_models(fleet),
        }

    @app.get(f"{API_PREFIX}/metrics")
    def metrics(
        fleet: Optional[str] = Query(None), version: Optional[int] = Query(None)
    ):
        fleet = fleet_or_default(fleet)
        if version is None:
            version = store.latest_version(fleet)
            if version is None:
                raise VersionNotFound(
                    f"fleet {fleet!r} has no trained model", fleet=fleet
                )
        entry = next(
            (e for e in store.list_models(fleet) if e["version"] == version), None
        )
        if entry is None:
            raise VersionNotFound(
                f"fleet {fleet!r} has no model version {version}",
                fleet=fleet,
                version=version,
            )
        return {"fleet": fleet, **entry}

    if config.static_dir and Path(config.static_dir).is_dir():
        app.mount(
            "/", StaticFiles(directory=config.static_dir, html=True), name="ui"
        )

    return app
