"""Append-only JSONL datastore with versioned model artifacts.

Layout under the root directory:

    events/<fleet>/<YYYY-MM-DD>.jsonl   one line per event, partitioned by UTC day
    incidents/<fleet>.jsonl             one line per declared incident
    feedback/<fleet>.jsonl              one line per expert correction
    suggestions/<fleet>.jsonl           one line per produced suggestion
    models/<fleet>/registry.json        version list plus latest pointer
    models/<fleet>/<version>/artifact.json

Event and incident files only ever grow; corrections are new feedback lines,
never edits, and the last line per incident wins. Registry and artifact
writes go to a temp file first and are renamed into place, so readers never
observe a half-written document. Model versions are integers assigned in
increasing order and never reused.

The store keeps a per-vehicle in-memory index (sorted timestamp arrays) so
incident traces are a couple of bisects instead of a file scan.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from bisect import bisect_right
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator, Optional

from .cascade import ModelArtifact, Suggestion
from .errors import (
    DuplicateIncidentId,
    StorageFailure,
    UnknownIncident,
    VersionNotFound,
)
from .model import (
    Event,
    Incident,
    IncidentTrace,
    SubsystemClass,
    WindowSpec,
    event_to_line,
    incident_to_line,
    validate_event,
    validate_incident,
)

EXPERT_SOURCE = "expert_feedback"


@dataclass(frozen=True)
class FeedbackRecord:
    """One expert correction; history is retained, the latest line wins."""

    incident_id: str
    label: SubsystemClass  # the expert's verdict
    created_at: int  # epoch ms
    prior_label: Optional[SubsystemClass] = None  # label before this correction
    model_suggestion: Optional[SubsystemClass] = None  # suggestion under review
    note: str = ""

    def to_record(self) -> dict:
        return {
            "incident_id": self.incident_id,
            "label": self.label.value,
            "created_at": self.created_at,
            "prior_label": self.prior_label.value if self.prior_label else None,
            "model_suggestion": (
                self.model_suggestion.value if self.model_suggestion else None
            ),
            "note": self.note,
        }

    @classmethod
    def from_record(cls, raw: dict) -> "FeedbackRecord":
        prior = raw.get("prior_label")
        suggested = raw.get("model_suggestion")
        return cls(
            incident_id=raw["incident_id"],
            label=SubsystemClass.parse(raw["label"]),
            created_at=int(raw["created_at"]),
            prior_label=SubsystemClass.parse(prior) if prior else None,
            model_suggestion=SubsystemClass.parse(suggested) if suggested else None,
            note=raw.get("note", ""),
        )


class _VehicleSeries:
    """Event history of one vehicle, sorted by timestamp on demand."""

    __slots__ = ("ts", "codes", "_sorted")

    def __init__(self):
        self.ts: list[int] = []
        self.codes: list[str] = []
        self._sorted = True

    def append(self, ts: int, code: str) -> None:
        if self.ts and ts < self.ts[-1]:
            self._sorted = False
        self.ts.append(ts)
        self.codes.append(code)

    def _ensure_sorted(self) -> None:
        if not self._sorted:
            order = sorted(range(len(self.ts)), key=self.ts.__getitem__)
            self.ts = [self.ts[i] for i in order]
            self.codes = [self.codes[i] for i in order]
            self._sorted = True

    def window(self, lo: int, hi: int) -> list[tuple[int, str]]:
        """Pairs with lo < ts <= hi."""
        self._ensure_sorted()
        a = bisect_right(self.ts, lo)
        b = bisect_right(self.ts, hi)
        return [(self.ts[i], self.codes[i]) for i in range(a, b)]


class _FleetIndex:
    def __init__(self):
        self.vehicles: dict[str, _VehicleSeries] = {}
        self.count = 0

    def add(self, vehicle: str, ts: int, code: str) -> None:
        series = self.vehicles.get(vehicle)
        if series is None:
            series = self.vehicles[vehicle] = _VehicleSeries()
        series.append(ts, code)
        self.count += 1

    def window(self, vehicle: str, lo: int, hi: int) -> list[tuple[int, str]]:
        series = self.vehicles.get(vehicle)
        return series.window(lo, hi) if series else []


def _day_name(ts_ms: int) -> str:
    return datetime.fromtimestamp(ts_ms / 1000.0, tz=timezone.utc).strftime(
        "%Y-%m-%d"
    )


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    try:
        tmp.write_text(text, encoding="utf-8")
        os.replace(tmp, path)
    except OSError as exc:
        raise StorageFailure(f"cannot write {path}: {exc}") from exc


def _read_jsonl(path: Path) -> Iterator[dict]:
    if not path.exists():
        return
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield json.loads(line)


class DataStore:
    """File-backed store; one instance is safe for threaded use."""

    def __init__(self, root):
        self.root = Path(root)
        self._lock = threading.RLock()
        self._indexes: dict[str, _FleetIndex] = {}
        self._incident_cache: dict[str, dict[str, Incident]] = {}
        self._suggestion_cache: dict[str, dict[str, Suggestion]] = {}
        try:
            self.root.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise StorageFailure(f"cannot create store root {root}: {exc}") from exc

    # --- paths -----------------------------------------------------------

    def _events_dir(self, fleet: str) -> Path:
        return self.root / "events" / fleet

    def _incidents_path(self, fleet: str) -> Path:
        return self.root / "incidents" / f"{fleet}.jsonl"

    def _feedback_path(self, fleet: str) -> Path:
        return self.root / "feedback" / f"{fleet}.jsonl"

    def _suggestions_path(self, fleet: str) -> Path:
        return self.root / "suggestions" / f"{fleet}.jsonl"

    def _models_dir(self, fleet: str) -> Path:
        return self.root / "models" / fleet

    def _registry_path(self, fleet: str) -> Path:
        return self._models_dir(fleet) / "registry.json"

    def fleets(self) -> list[str]:
        seen = set()
        for sub in ("events", "incidents", "models"):
            base = self.root / sub
            if base.exists():
                for child in base.iterdir():
                    seen.add(child.stem if child.is_file() else child.name)
        return sorted(seen)

    # --- events ----------------------------------------------------------

    def append_events(self, fleet: str, events: Iterable[Event]) -> int:
        """Append events grouped into day partitions; returns the count."""
        batches: dict[str, list[Event]] = {}
        for event in events:
            batches.setdefault(_day_name(event.timestamp), []).append(event)
        if not batches:
            return 0
        with self._lock:
            directory = self._events_dir(fleet)
            try:
                directory.mkdir(parents=True, exist_ok=True)
                for day, items in sorted(batches.items()):
                    payload = "".join(event_to_line(e) for e in items)
                    with open(directory / f"{day}.jsonl", "a", encoding="utf-8") as fh:
                        fh.write(payload)
            except OSError as exc:
                raise StorageFailure(f"cannot append events: {exc}") from exc
            index = self._indexes.get(fleet)
            if index is not None:
                for items in batches.values():
                    for e in items:
                        index.add(e.vehicle_id, e.timestamp, e.code)
            return sum(len(items) for items in batches.values())

    def iter_events(self, fleet: str) -> Iterator[Event]:
        """All stored events in partition order (not globally time-sorted)."""
        directory = self._events_dir(fleet)
        if not directory.exists():
            return
        for path in sorted(directory.glob("*.jsonl")):
            for raw in _read_jsonl(path):
                yield validate_event(raw)

    def _index(self, fleet: str) -> _FleetIndex:
        with self._lock:
            index = self._indexes.get(fleet)
            if index is None:
                index = _FleetIndex()
                for event in self.iter_events(fleet):
                    index.add(event.vehicle_id, event.timestamp, event.code)
                self._indexes[fleet] = index
            return index

    def event_count(self, fleet: str) -> int:
        return self._index(fleet).count

    # --- incidents ---------------------------------------------------------

    def _incidents(self, fleet: str) -> dict[str, Incident]:
        with self._lock:
            cache = self._incident_cache.get(fleet)
            if cache is None:
                cache = {}
                for raw in _read_jsonl(self._incidents_path(fleet)):
                    incident = validate_incident(raw)
                    cache[incident.id] = incident
                self._incident_cache[fleet] = cache
            return cache

    def record_incident(self, fleet: str, incident: Incident) -> None:
        with self._lock:
            cache = self._incidents(fleet)
            if incident.id in cache:
                raise DuplicateIncidentId(
                    f"incident {incident.id!r} already recorded",
                    incident_id=incident.id,
                )
            path = self._incidents_path(fleet)
            try:
                path.parent.mkdir(parents=True, exist_ok=True)
                with open(path, "a", encoding="utf-8") as fh:
                    fh.write(incident_to_line(incident))
            except OSError as exc:
                raise StorageFailure(f"cannot append incident: {exc}") from exc
            cache[incident.id] = incident

    def incidents(self, fleet: str) -> list[Incident]:
        values = list(self._incidents(fleet).values())
        values.sort(key=lambda i: (i.timestamp, i.id))
        return values

    def get_incident(self, fleet: str, incident_id: str) -> Incident:
        incident = self._incidents(fleet).get(incident_id)
        if incident is None:
            raise UnknownIncident(
                f"unknown incident {incident_id!r}", incident_id=incident_id
            )
        return incident

    def has_incident(self, fleet: str, incident_id: str) -> bool:
        return incident_id in self._incidents(fleet)

    # --- feedback ----------------------------------------------------------

    def record_feedback(self, fleet: str, record: FeedbackRecord) -> int:
        """Append one correction; returns its 1-based rank for the incident."""
        with self._lock:
            if not self.has_incident(fleet, record.incident_id):
                raise UnknownIncident(
                    f"unknown incident {record.incident_id!r}",
                    incident_id=record.incident_id,
                )
            path = self._feedback_path(fleet)
            try:
                path.parent.mkdir(parents=True, exist_ok=True)
                with open(path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(record.to_record(), sort_keys=True) + "\n")
            except OSError as exc:
                raise StorageFailure(f"cannot append feedback: {exc}") from exc
            return len(self.feedback_history(fleet, record.incident_id))

    def feedback_history(
        self, fleet: str, incident_id: Optional[str] = None
    ) -> list[FeedbackRecord]:
        """Feedback lines in file order (append order)."""
        records = [
            FeedbackRecord.from_record(raw)
            for raw in _read_jsonl(self._feedback_path(fleet))
        ]
        if incident_id is not None:
            records = [r for r in records if r.incident_id == incident_id]
        return records

    def effective_labels(
        self, fleet: str
    ) -> dict[str, tuple[SubsystemClass, str]]:
        """Label per incident after corrections: the last feedback line for an
        incident wins; otherwise the label the incident was declared with."""
        labels: dict[str, tuple[SubsystemClass, str]] = {}
        for incident in self._incidents(fleet).values():
            if incident.label is not None:
                labels[incident.id] = (incident.label, incident.label_source)
        for record in self.feedback_history(fleet):
            labels[record.incident_id] = (record.label, EXPERT_SOURCE)
        return labels

    def labeled_incidents(
        self,
        fleet: str,
        since: Optional[int] = None,
        until: Optional[int] = None,
    ) -> list[Incident]:
        """Labeled incidents ordered by time, with corrections applied.

        Each returned incident carries its effective label and that label's
        source; incidents without any label are skipped.
        """
        labels = self.effective_labels(fleet)
        rows = []
        for incident in self.incidents(fleet):
            if since is not None and incident.timestamp < since:
                continue
            if until is not None and incident.timestamp > until:
                continue
            entry = labels.get(incident.id)
            if entry is None:
                continue
            label, source = entry
            if incident.label is label and incident.label_source == source:
                rows.append(incident)
            else:
                rows.append(replace(incident, label=label, label_source=source))
        return rows

    def export_training_set(
        self,
        fleet: str,
        since: Optional[int] = None,
        until: Optional[int] = None,
    ) -> list[IncidentTrace]:
        """Full-lookback traces of every labeled incident in the range."""
        return [
            self.trace(fleet, incident)
            for incident in self.labeled_incidents(fleet, since=since, until=until)
        ]

    def training_fingerprint(self, fleet: str, until: Optional[int] = None) -> dict:
        """Identifies the labeled data a model was trained on."""
        rows = self.labeled_incidents(fleet, until=until)
        events = self.event_count(fleet)
        payload = {
            "labels": [[i.id, i.label.value] for i in rows],
            "events": events,
            "until": until,
        }
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return {
            "sha256": hashlib.sha256(blob.encode("utf-8")).hexdigest(),
            "incidents": len(rows),
            "events": events,
            "until": until,
        }

    # --- suggestions ---------------------------------------------------------

    def record_suggestion(self, fleet: str, suggestion: Suggestion) -> None:
        with self._lock:
            path = self._suggestions_path(fleet)
            try:
                path.parent.mkdir(parents=True, exist_ok=True)
                with open(path, "a", encoding="utf-8") as fh:
                    fh.write(
                        json.dumps(suggestion.to_dict(), sort_keys=True) + "\n"
                    )
            except OSError as exc:
                raise StorageFailure(f"cannot append suggestion: {exc}") from exc
            cache = self._suggestion_cache.get(fleet)
            if cache is not None:
                cache[suggestion.incident_id] = suggestion

    def suggestions(self, fleet: str) -> dict[str, Suggestion]:
        """Latest stored suggestion per incident."""
        with self._lock:
            cache = self._suggestion_cache.get(fleet)
            if cache is None:
                cache = {}
                for raw in _read_jsonl(self._suggestions_path(fleet)):
                    suggestion = Suggestion.from_dict(raw)
                    cache[suggestion.incident_id] = suggestion
                self._suggestion_cache[fleet] = cache
            return cache

    def latest_suggestion(
        self, fleet: str, incident_id: str
    ) -> Optional[Suggestion]:
        return self.suggestions(fleet).get(incident_id)

    # --- traces ------------------------------------------------------------

    def trace(
        self,
        fleet: str,
        incident: Incident,
        window: WindowSpec = WindowSpec(240),
    ) -> IncidentTrace:
        index = self._index(fleet)
        lo = incident.timestamp - window.length_ms
        merged: list[Event] = []
        for vehicle in incident.composition:
            for ts, code in index.window(vehicle, lo, incident.timestamp):
                merged.append(Event(vehicle_id=vehicle, timestamp=ts, code=code))
        merged.sort(key=Event.sort_key)
        return IncidentTrace(incident=incident, events=tuple(merged))

    def traces(
        self, fleet: str, incidents: Iterable[Incident]
    ) -> list[IncidentTrace]:
        return [self.trace(fleet, incident) for incident in incidents]

    # --- models ------------------------------------------------------------

    def _registry(self, fleet: str) -> dict:
        path = self._registry_path(fleet)
        if not path.exists():
            return {"fleet": fleet, "versions": [], "latest": None}
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise StorageFailure(f"cannot read registry {path}: {exc}") from exc

    def save_model(self, artifact: ModelArtifact) -> int:
        """Assign the next version number and persist the artifact.

        Version numbers only ever grow per fleet: the next version is one
        past the highest ever assigned, so numbers are never reused.
        """
        with self._lock:
            fleet = artifact.fleet
            registry = self._registry(fleet)
            highest = max(
                (entry["version"] for entry in registry["versions"]), default=0
            )
            version = highest + 1
            directory = self._models_dir(fleet) / str(version)
            if directory.exists():
                raise StorageFailure(f"model version {version} already exists")
            try:
                directory.mkdir(parents=True)
            except OSError as exc:
                raise StorageFailure(f"cannot create {directory}: {exc}") from exc
            stamped = artifact.with_version(version)
            _atomic_write(
                directory / "artifact.json",
                json.dumps(stamped.to_dict(), sort_keys=True),
            )
            registry["versions"].append(
                {
                    "version": version,
                    "created_at": stamped.created_at,
                    "fingerprint": stamped.fingerprint,
                    "content_hash": stamped.content_hash(),
                    "eval_summary": stamped.eval_summary,
                }
            )
            registry["latest"] = version
            _atomic_write(
                self._registry_path(fleet),
                json.dumps(registry, indent=2, sort_keys=True),
            )
            return version

    def load_model(self, fleet: str, version: Optional[int] = None) -> ModelArtifact:
        with self._lock:
            if version is None:
                version = self._registry(fleet).get("latest")
                if version is None:
                    raise VersionNotFound(
                        f"fleet {fleet!r} has no trained model", fleet=fleet
                    )
            path = self._models_dir(fleet) / str(version) / "artifact.json"
            if not path.exists():
                raise VersionNotFound(
                    f"fleet {fleet!r} has no model version {version}",
                    fleet=fleet,
                    version=version,
                )
            try:
                payload = json.loads(path.read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                raise StorageFailure(f"cannot read artifact {path}: {exc}") from exc
            return ModelArtifact.from_dict(payload)

    def list_models(self, fleet: str) -> list[dict]:
        return list(self._registry(fleet)["versions"])

    def latest_version(self, fleet: str) -> Optional[int]:
        return self._registry(fleet).get("latest")
