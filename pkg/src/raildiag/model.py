"""Domain types, record validation and trace slicing.

Timestamps are integers (epoch milliseconds, UTC) throughout the package;
RFC 3339 strings are accepted at the ingestion boundary and produced on
export.
"""

from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from typing import Iterable, Mapping, Optional

from .errors import EmptyCode, MissingField, UnknownClass, UnparseableTimestamp

MINUTE_MS = 60_000
MAX_WINDOW_MINUTES = 240
MAX_WINDOW_MS = MAX_WINDOW_MINUTES * MINUTE_MS

# Retention horizon for event timestamps; records outside are rejected as
# unparseable garbage rather than silently kept.
RETENTION_MIN_MS = int(datetime(1990, 1, 1, tzinfo=timezone.utc).timestamp() * 1000)
RETENTION_MAX_MS = int(datetime(2100, 1, 1, tzinfo=timezone.utc).timestamp() * 1000)


class SubsystemClass(Enum):
    """The 12 technical-cause labels; enumeration order is the tie-break order."""

    ETCS = "ETCS"
    HighOrLowVoltage = "HighOrLowVoltage"
    Couplings = "Couplings"
    Doors = "Doors"
    Brakes = "Brakes"
    Communication = "Communication"
    AirProduction = "AirProduction"
    Cabling = "Cabling"
    Body = "Body"
    Traction = "Traction"
    Sanitaries = "Sanitaries"
    Others = "Others"

    @classmethod
    def parse(cls, value: str) -> "SubsystemClass":
        try:
            return cls(value)
        except ValueError:
            raise UnknownClass(
                f"unknown subsystem class {value!r}",
                value=value,
                allowed=[c.value for c in cls],
            ) from None


CLASS_ORDER: tuple[SubsystemClass, ...] = tuple(SubsystemClass)


def parse_timestamp(value) -> int:
    """Parse an RFC 3339 string or epoch milliseconds into epoch ms (UTC)."""
    if isinstance(value, bool):
        raise UnparseableTimestamp(f"not a timestamp: {value!r}", value=repr(value))
    if isinstance(value, (int, float)):
        ts = int(value)
    elif isinstance(value, str):
        text = value.strip()
        try:
            ts = int(text)
        except ValueError:
            try:
                dt = datetime.fromisoformat(text.replace("Z", "+00:00"))
            except ValueError:
                raise UnparseableTimestamp(
                    f"cannot parse timestamp {value!r}", value=value
                ) from None
            if dt.tzinfo is None:
                dt = dt.replace(tzinfo=timezone.utc)
            ts = int(round(dt.timestamp() * 1000))
    else:
        raise UnparseableTimestamp(f"not a timestamp: {value!r}", value=repr(value))
    if not (RETENTION_MIN_MS <= ts <= RETENTION_MAX_MS):
        raise UnparseableTimestamp(
            f"timestamp {value!r} outside retention horizon", value=repr(value)
        )
    return ts


def format_timestamp(ts_ms: int) -> str:
    """Epoch milliseconds to RFC 3339 with millisecond resolution."""
    dt = datetime.fromtimestamp(ts_ms / 1000, tz=timezone.utc)
    return dt.strftime("%Y-%m-%dT%H:%M:%S.") + f"{ts_ms % 1000:03d}Z"


@dataclass(frozen=True)
class Event:
    """One tokenized on-board state report."""

    vehicle_id: str
    timestamp: int  # epoch ms, UTC
    code: str
    context: Optional[Mapping[str, str]] = None

    def sort_key(self) -> tuple:
        return (self.timestamp, self.vehicle_id, self.code)

    def to_record(self) -> dict:
        record = {
            "vehicle_id": self.vehicle_id,
            "timestamp": format_timestamp(self.timestamp),
            "code": self.code,
        }
        if self.context:
            record["context"] = dict(self.context)
        return record


@dataclass(frozen=True)
class Incident:
    """An operational disruption to be diagnosed by technical cause."""

    id: str
    timestamp: int
    composition: tuple[str, ...]
    fleet: str
    label: Optional[SubsystemClass] = None
    label_source: Optional[str] = None  # technician | expert_feedback | synthetic_ground_truth

    def __post_init__(self):
        if not self.composition:
            raise MissingField("incident composition must list at least one vehicle")

    def to_record(self) -> dict:
        record = {
            "id": self.id,
            "timestamp": format_timestamp(self.timestamp),
            "composition": list(self.composition),
            "fleet": self.fleet,
        }
        if self.label is not None:
            record["label"] = self.label.value
            record["label_source"] = self.label_source or "technician"
        return record


@dataclass(frozen=True)
class WindowSpec:
    """Lookback window length, hard-capped at four hours."""

    length_minutes: int

    def __post_init__(self):
        if not (0 < self.length_minutes <= MAX_WINDOW_MINUTES):
            raise ValueError(
                f"window length must be in (0, {MAX_WINDOW_MINUTES}] minutes, "
                f"got {self.length_minutes}"
            )

    @property
    def length_ms(self) -> int:
        return self.length_minutes * MINUTE_MS


@dataclass(frozen=True)
class IncidentTrace:
    """All composition events in the four hours up to the incident instant."""

    incident: Incident
    events: tuple[Event, ...]

    @property
    def codes(self) -> list[str]:
        return [e.code for e in self.events]


_EVENT_FIELD_ALIASES = {
    "vehicle_id": ("vehicle_id", "vehicle"),
    "timestamp": ("timestamp", "ts"),
    "code": ("code",),
}


def validate_event(raw: Mapping) -> Event:
    """Validate a raw field map into an Event; context keys pass through verbatim."""
    values = {}
    for name, aliases in _EVENT_FIELD_ALIASES.items():
        for alias in aliases:
            if alias in raw and raw[alias] is not None:
                values[name] = raw[alias]
                break
        else:
            raise MissingField(f"event record is missing {name!r}", field=name)
    code = values["code"]
    if not isinstance(code, str) or not code.strip():
        raise EmptyCode("event code is empty", vehicle_id=str(values["vehicle_id"]))
    context = raw.get("context")
    if context is not None:
        context = {str(k): str(v) for k, v in dict(context).items()}
    return Event(
        vehicle_id=str(values["vehicle_id"]),
        timestamp=parse_timestamp(values["timestamp"]),
        code=code,
        context=context,
    )


def validate_incident(raw: Mapping) -> Incident:
    for name in ("id", "timestamp", "composition", "fleet"):
        if name not in raw or raw[name] is None:
            raise MissingField(f"incident record is missing {name!r}", field=name)
    composition = raw["composition"]
    if isinstance(composition, str) or not isinstance(composition, (list, tuple)):
        raise MissingField("incident composition must be an array of vehicle ids")
    if not composition:
        raise MissingField("incident composition must list at least one vehicle")
    label = raw.get("label")
    parsed_label = SubsystemClass.parse(label) if label else None
    return Incident(
        id=str(raw["id"]),
        timestamp=parse_timestamp(raw["timestamp"]),
        composition=tuple(str(v) for v in composition),
        fleet=str(raw["fleet"]),
        label=parsed_label,
        label_source=(raw.get("label_source") or "technician") if parsed_label else None,
    )


def slice_trace(
    events: Iterable[Event], incident: Incident, window: WindowSpec
) -> list[Event]:
    """Events of the composition inside (t - window, t], in canonical order.

    The window is half-open at the past edge and closed at the incident
    instant; input order is irrelevant.
    """
    lo = incident.timestamp - window.length_ms
    hi = incident.timestamp
    vehicles = set(incident.composition)
    picked = [
        e for e in events if e.vehicle_id in vehicles and lo < e.timestamp <= hi
    ]
    picked.sort(key=Event.sort_key)
    return picked


def build_trace(events: Iterable[Event], incident: Incident) -> IncidentTrace:
    """Slice the widest (240 min) window into an IncidentTrace."""
    window = WindowSpec(MAX_WINDOW_MINUTES)
    return IncidentTrace(incident=incident, events=tuple(slice_trace(events, incident, window)))


class TraceWindows:
    """Read-only suffix view over one trace, for nested window extraction."""

    def __init__(self, trace: IncidentTrace):
        self.trace = trace
        self._timestamps = [e.timestamp for e in trace.events]

    def codes_in_window(self, window: WindowSpec) -> list[str]:
        lo = self.trace.incident.timestamp - window.length_ms
        start = bisect_right(self._timestamps, lo)
        return [e.code for e in self.trace.events[start:]]

    def codes_in_band(self, outer: WindowSpec, inner: Optional[WindowSpec]) -> list[str]:
        """Codes in (t - outer, t - inner]; disjoint-band variant."""
        lo = self.trace.incident.timestamp - outer.length_ms
        hi = self.trace.incident.timestamp - (inner.length_ms if inner else 0)
        start = bisect_right(self._timestamps, lo)
        stop = bisect_right(self._timestamps, hi)
        return [e.code for e in self.trace.events[start:stop]]


# --- line-delimited record IO --------------------------------------------------

def read_events_jsonl(lines: Iterable[str]) -> list[Event]:
    """Parse line-delimited event records, raising on the first invalid one."""
    events = []
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MissingField(f"line {lineno}: not valid JSON ({exc})") from None
        events.append(validate_event(raw))
    return events


def read_incidents_jsonl(lines: Iterable[str]) -> list[Incident]:
    incidents = []
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MissingField(f"line {lineno}: not valid JSON ({exc})") from None
        incidents.append(validate_incident(raw))
    return incidents


def event_to_line(event: Event) -> str:
    return json.dumps(event.to_record(), sort_keys=True, separators=(",", ":")) + "\n"


def incident_to_line(incident: Incident) -> str:
    return (
        json.dumps(incident.to_record(), sort_keys=True, separators=(",", ":")) + "\n"
    )
