"""Deterministic synthetic fleet generator with planted causal event sets.

Every incident of a class emits that class's signature sequences (in order,
jittered inside a per-signature placement window before the incident, with
configurable emission probability) on top of uniform background noise; any
code occurrence can repeat as a burst. The generator also returns the ground
truth needed to verify mining and selection by brute force.

Generation is deterministic given the seed: noise uses one random stream per
(vehicle, day) and incident emissions one stream per incident, so output is
independent of generation order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from .errors import InvalidSpec
from .model import (
    MINUTE_MS,
    Event,
    Incident,
    SubsystemClass,
    parse_timestamp,
)

DAY_MS = 24 * 60 * MINUTE_MS


@dataclass(frozen=True)
class SignatureSpec:
    """One planted ordered code sequence for a class."""

    codes: tuple[str, ...]
    placement_start_min: float  # nearest edge, minutes before the incident
    placement_end_min: float  # farthest edge
    emission_prob: float = 0.9

    def __post_init__(self):
        if len(self.codes) < 2:
            raise InvalidSpec("signatures need at least two codes")
        if not (0 < self.placement_start_min < self.placement_end_min <= 240):
            raise InvalidSpec(
                f"bad placement window ({self.placement_start_min}, "
                f"{self.placement_end_min})"
            )
        if not (0.0 <= self.emission_prob <= 1.0):
            raise InvalidSpec("emission probability must be in [0, 1]")

    def to_dict(self) -> dict:
        return {
            "codes": list(self.codes),
            "placement_start_min": self.placement_start_min,
            "placement_end_min": self.placement_end_min,
            "emission_prob": self.emission_prob,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "SignatureSpec":
        return cls(
            codes=tuple(payload["codes"]),
            placement_start_min=float(payload["placement_start_min"]),
            placement_end_min=float(payload["placement_end_min"]),
            emission_prob=float(payload.get("emission_prob", 0.9)),
        )


@dataclass(frozen=True)
class FleetSpec:
    seed: int = 7
    fleet: str = "demo"
    n_vehicles: int = 20
    events_per_vehicle_per_day: float = 40.0  # raw rate, bursts included
    n_incidents: int = 900
    duration_days: int = 540
    start_time: int = parse_timestamp("2023-01-01T00:00:00Z")
    class_distribution: dict[SubsystemClass, float] = field(default_factory=dict)
    signatures: dict[SubsystemClass, tuple[SignatureSpec, ...]] = field(
        default_factory=dict
    )
    burst_rate: float = 0.3
    burst_span: tuple[int, int] = (2, 200)
    n_noise_codes: int = 120
    composition_weights: tuple[float, ...] = (0.5, 0.3, 0.2)  # P(size 1, 2, 3)
    contamination_rate: float = 0.0
    contamination_band: tuple[float, float] = (30.0, 235.0)

    def __post_init__(self):
        if self.n_vehicles < 1 or self.n_incidents < 1 or self.duration_days < 1:
            raise InvalidSpec("fleet, incident and duration counts must be positive")
        if not self.class_distribution:
            raise InvalidSpec("class distribution is required")
        if abs(sum(self.class_distribution.values()) - 1.0) > 1e-9:
            raise InvalidSpec("class distribution must sum to 1")
        if not (0.0 <= self.burst_rate <= 1.0):
            raise InvalidSpec("burst rate must be in [0, 1]")
        if not (2 <= self.burst_span[0] <= self.burst_span[1]):
            raise InvalidSpec("burst span must satisfy 2 <= lo <= hi")
        if not (0.0 <= self.contamination_rate <= 1.0):
            raise InvalidSpec("contamination rate must be in [0, 1]")
        if abs(sum(self.composition_weights) - 1.0) > 1e-9:
            raise InvalidSpec("composition weights must sum to 1")
        if len(self.composition_weights) > self.n_vehicles:
            raise InvalidSpec("composition cannot exceed the fleet size")
        signature_codes = set()
        for cls, sigs in self.signatures.items():
            if cls not in self.class_distribution:
                raise InvalidSpec(f"signatures given for absent class {cls.value}")
            for sig in sigs:
                signature_codes.update(sig.codes)
        noise = set(self.noise_codes())
        if signature_codes & noise:
            raise InvalidSpec("signature and noise code sets must be disjoint")

    def noise_codes(self) -> list[str]:
        return [f"noise.n{i:03d}" for i in range(self.n_noise_codes)]

    def vehicles(self) -> list[str]:
        return [f"{self.fleet}-v{i:03d}" for i in range(self.n_vehicles)]

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "fleet": self.fleet,
            "n_vehicles": self.n_vehicles,
            "events_per_vehicle_per_day": self.events_per_vehicle_per_day,
            "n_incidents": self.n_incidents,
            "duration_days": self.duration_days,
            "start_time": self.start_time,
            "class_distribution": {
                cls.value: share for cls, share in self.class_distribution.items()
            },
            "signatures": {
                cls.value: [sig.to_dict() for sig in sigs]
                for cls, sigs in self.signatures.items()
            },
            "burst_rate": self.burst_rate,
            "burst_span": list(self.burst_span),
            "n_noise_codes": self.n_noise_codes,
            "composition_weights": list(self.composition_weights),
            "contamination_rate": self.contamination_rate,
            "contamination_band": list(self.contamination_band),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "FleetSpec":
        return cls(
            seed=int(payload.get("seed", 7)),
            fleet=payload.get("fleet", "demo"),
            n_vehicles=int(payload.get("n_vehicles", 20)),
            events_per_vehicle_per_day=float(
                payload.get("events_per_vehicle_per_day", 40.0)
            ),
            n_incidents=int(payload.get("n_incidents", 900)),
            duration_days=int(payload.get("duration_days", 540)),
            start_time=parse_timestamp(payload.get("start_time", "2023-01-01T00:00:00Z")),
            class_distribution={
                SubsystemClass(name): float(share)
                for name, share in payload["class_distribution"].items()
            },
            signatures={
                SubsystemClass(name): tuple(
                    SignatureSpec.from_dict(s) for s in sigs
                )
                for name, sigs in payload.get("signatures", {}).items()
            },
            burst_rate=float(payload.get("burst_rate", 0.3)),
            burst_span=tuple(payload.get("burst_span", (2, 200))),
            n_noise_codes=int(payload.get("n_noise_codes", 120)),
            composition_weights=tuple(
                payload.get("composition_weights", (0.5, 0.3, 0.2))
            ),
            contamination_rate=float(payload.get("contamination_rate", 0.0)),
            contamination_band=tuple(payload.get("contamination_band", (30.0, 235.0))),
        )


_DEFAULT_SHARES = (
    (SubsystemClass.ETCS, 0.20),
    (SubsystemClass.Doors, 0.16),
    (SubsystemClass.HighOrLowVoltage, 0.13),
    (SubsystemClass.Brakes, 0.11),
    (SubsystemClass.Couplings, 0.09),
    (SubsystemClass.Communication, 0.08),
    (SubsystemClass.AirProduction, 0.06),
    (SubsystemClass.Traction, 0.05),
    (SubsystemClass.Cabling, 0.04),
    (SubsystemClass.Body, 0.03),
    (SubsystemClass.Sanitaries, 0.025),
    (SubsystemClass.Others, 0.025),
)

# (signature lengths, placement window) per class position; a few classes sit
# beyond the 5 min window so the cascade's fall-through paths get exercised.
_DEFAULT_SHAPES = (
    ((3, 4, 2), (0.5, 4.5)),
    ((4, 3), (0.5, 4.5)),
    ((5, 2), (1.0, 4.8)),
    ((3, 3), (0.5, 4.0)),
    ((4, 2), (6.0, 13.0)),
    ((2, 5), (0.5, 4.5)),
    ((3, 4), (1.0, 4.5)),
    ((5,), (0.5, 4.0)),
    ((3, 2), (6.0, 13.0)),
    ((4,), (0.5, 4.5)),
    ((2, 3), (16.0, 28.0)),
    ((3,), (0.5, 4.5)),
)


def default_fleet_spec(
    seed: int = 7,
    emission_prob: float = 0.9,
    burst_rate: float = 0.3,
    contamination_rate: float = 0.0,
    **overrides,
) -> FleetSpec:
    """Desk-scale default: 20 vehicles, 540 days, 900 incidents, ~500k events."""
    distribution = dict(_DEFAULT_SHARES)
    signatures: dict[SubsystemClass, tuple[SignatureSpec, ...]] = {}
    for pos, (cls, _) in enumerate(_DEFAULT_SHARES):
        lengths, placement = _DEFAULT_SHAPES[pos]
        sigs = []
        for si, length in enumerate(lengths):
            codes = tuple(
                f"{cls.value.lower()}.scn{si}.step{j}" for j in range(length)
            )
            sigs.append(
                SignatureSpec(
                    codes=codes,
                    placement_start_min=placement[0],
                    placement_end_min=placement[1],
                    emission_prob=emission_prob,
                )
            )
        signatures[cls] = tuple(sigs)
    return FleetSpec(
        seed=seed,
        class_distribution=distribution,
        signatures=signatures,
        burst_rate=burst_rate,
        contamination_rate=contamination_rate,
        **overrides,
    )


@dataclass
class GroundTruth:
    """Everything needed to recompute planted supports by brute force."""

    classes: dict[str, SubsystemClass]  # incident id -> class
    emissions: dict[str, list[dict]]  # incident id -> emitted sequence records
    signature_catalog: dict[SubsystemClass, list[SignatureSpec]]
    noise_codes: list[str]

    def signature_codes(self) -> set[str]:
        return {
            code
            for sigs in self.signature_catalog.values()
            for sig in sigs
            for code in sig.codes
        }

    def planted_signatures(self, max_len: Optional[int] = None) -> set[tuple[str, ...]]:
        out = set()
        for sigs in self.signature_catalog.values():
            for sig in sigs:
                if max_len is None or len(sig.codes) <= max_len:
                    out.add(sig.codes)
        return out

    def emitted_support(self, codes: tuple[str, ...]) -> dict[SubsystemClass, int]:
        """Incidents per class whose emissions include this exact sequence."""
        support: dict[SubsystemClass, int] = {}
        for incident_id, records in self.emissions.items():
            if any(tuple(r["codes"]) == codes for r in records):
                cls = self.classes[incident_id]
                support[cls] = support.get(cls, 0) + 1
        return support

    def to_dict(self) -> dict:
        return {
            "classes": {iid: cls.value for iid, cls in self.classes.items()},
            "emissions": self.emissions,
            "signature_catalog": {
                cls.value: [sig.to_dict() for sig in sigs]
                for cls, sigs in self.signature_catalog.items()
            },
            "noise_codes": self.noise_codes,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "GroundTruth":
        return cls(
            classes={
                iid: SubsystemClass(name) for iid, name in payload["classes"].items()
            },
            emissions=payload["emissions"],
            signature_catalog={
                SubsystemClass(name): [SignatureSpec.from_dict(s) for s in sigs]
                for name, sigs in payload["signature_catalog"].items()
            },
            noise_codes=payload["noise_codes"],
        )


def _expected_burst_size(span: tuple[int, int]) -> float:
    lo, hi = span
    if hi == lo:
        return float(lo)
    return (hi - lo) / math.log(hi / lo)


def _burst_times(rng: np.random.Generator, t0: int, burst_rate: float,
                 span: tuple[int, int]) -> list[int]:
    """Timestamps for one occurrence, possibly expanded into a burst."""
    if burst_rate > 0 and rng.random() < burst_rate:
        log_lo, log_hi = math.log(span[0]), math.log(span[1] + 1)
        size = min(span[1], max(span[0], int(math.exp(rng.uniform(log_lo, log_hi)))))
        step_ms = rng.uniform(50, 250)
        return [t0 + int(i * step_ms) for i in range(size)]
    return [t0]


@dataclass
class GeneratedFleet:
    spec: FleetSpec
    incidents: list[Incident]
    ground_truth: GroundTruth
    _compact: list[tuple[int, str, str]]  # (timestamp, vehicle, code), sorted

    @property
    def n_events(self) -> int:
        return len(self._compact)

    def iter_events(self) -> Iterator[Event]:
        for ts, vehicle, code in self._compact:
            yield Event(vehicle_id=vehicle, timestamp=ts, code=code)


def generate(spec: FleetSpec) -> GeneratedFleet:
    """Generate events, labeled incidents and ground truth; deterministic."""
    vehicles = spec.vehicles()
    noise_codes = spec.noise_codes()
    burst_mult = (1 - spec.burst_rate) + spec.burst_rate * _expected_burst_size(
        spec.burst_span
    )
    base_rate = spec.events_per_vehicle_per_day / burst_mult

    events: list[tuple[int, str, str]] = []

    # Background noise, one stream per (vehicle, day).
    for vi, vehicle in enumerate(vehicles):
        for day in range(spec.duration_days):
            rng = np.random.default_rng([spec.seed, 1000 + vi, day])
            count = rng.poisson(base_rate)
            if count == 0:
                continue
            offsets = np.sort(rng.integers(0, DAY_MS, size=count))
            codes = rng.integers(0, len(noise_codes), size=count)
            day_start = spec.start_time + day * DAY_MS
            for off, ci in zip(offsets.tolist(), codes.tolist()):
                t0 = day_start + off
                for ts in _burst_times(rng, t0, spec.burst_rate, spec.burst_span):
                    events.append((ts, vehicle, noise_codes[ci]))

    # Incident schedule: class apportionment by largest remainder, then a
    # seeded shuffle; times uniform over the simulated period.
    rng_inc = np.random.default_rng([spec.seed, 1])
    classes_sorted = sorted(spec.class_distribution, key=lambda c: c.value)
    quotas = {
        cls: spec.class_distribution[cls] * spec.n_incidents for cls in classes_sorted
    }
    counts = {cls: int(quotas[cls]) for cls in classes_sorted}
    shortfall = spec.n_incidents - sum(counts.values())
    by_remainder = sorted(
        classes_sorted, key=lambda c: (quotas[c] - counts[c]), reverse=True
    )
    for cls in by_remainder[:shortfall]:
        counts[cls] += 1
    slots: list[SubsystemClass] = [
        cls for cls in classes_sorted for _ in range(counts[cls])
    ]
    rng_inc.shuffle(slots)  # type: ignore[arg-type]

    horizon_lo = spec.start_time + 241 * MINUTE_MS
    horizon_hi = spec.start_time + spec.duration_days * DAY_MS - MINUTE_MS
    times = np.sort(rng_inc.integers(horizon_lo, horizon_hi, size=spec.n_incidents))

    incidents: list[Incident] = []
    classes: dict[str, SubsystemClass] = {}
    emissions: dict[str, list[dict]] = {}
    sizes = rng_inc.choice(
        np.arange(1, len(spec.composition_weights) + 1),
        size=spec.n_incidents,
        p=np.asarray(spec.composition_weights),
    )

    contaminable = [cls for cls in classes_sorted if spec.signatures.get(cls)]
    for idx in range(spec.n_incidents):
        incident_id = f"inc-{idx:05d}"
        cls = slots[idx]
        t = int(times[idx])
        rng = np.random.default_rng([spec.seed, 2, idx])
        composition = tuple(
            vehicles[i] for i in sorted(
                rng.choice(len(vehicles), size=int(sizes[idx]), replace=False).tolist()
            )
        )
        incidents.append(
            Incident(
                id=incident_id,
                timestamp=t,
                composition=composition,
                fleet=spec.fleet,
                label=cls,
                label_source="synthetic_ground_truth",
            )
        )
        classes[incident_id] = cls
        records: list[dict] = []

        def emit_sequence(sig: SignatureSpec, kind: str, owner: SubsystemClass):
            vehicle = composition[int(rng.integers(0, len(composition)))]
            span_ms = (sig.placement_end_min - sig.placement_start_min) * MINUTE_MS
            slot = span_ms / len(sig.codes)
            start = t - sig.placement_end_min * MINUTE_MS
            for j, code in enumerate(sig.codes):
                t0 = int(start + slot * (j + 0.2 + 0.6 * rng.random()))
                for ts in _burst_times(rng, t0, spec.burst_rate, spec.burst_span):
                    events.append((ts, vehicle, code))
            records.append(
                {"codes": list(sig.codes), "class": owner.value, "kind": kind}
            )

        for sig in spec.signatures.get(cls, ()):
            if rng.random() < sig.emission_prob:
                emit_sequence(sig, "signature", cls)
        if spec.contamination_rate > 0 and rng.random() < spec.contamination_rate:
            others = [c for c in contaminable if c is not cls]
            if others:
                other = others[int(rng.integers(0, len(others)))]
                sigs = spec.signatures[other]
                source = sigs[int(rng.integers(0, len(sigs)))]
                lo, hi = spec.contamination_band
                contaminant = SignatureSpec(
                    codes=source.codes,
                    placement_start_min=lo,
                    placement_end_min=hi,
                    emission_prob=1.0,
                )
                emit_sequence(contaminant, "contamination", other)
        emissions[incident_id] = records

    events.sort()
    ground_truth = GroundTruth(
        classes=classes,
        emissions=emissions,
        signature_catalog={
            cls: list(sigs) for cls, sigs in spec.signatures.items()
        },
        noise_codes=noise_codes,
    )
    return GeneratedFleet(
        spec=spec,
        incidents=incidents,
        ground_truth=ground_truth,
        _compact=events,
    )


def load_spec(path) -> FleetSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return FleetSpec.from_dict(json.load(fh))


def save_spec(spec: FleetSpec, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(spec.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
