"""Shared fixtures: handcrafted traces plus a small generated fleet.

The small fleet is session-scoped and read-only; tests that mutate storage
build their own store from it. The verdict plumbing prints one line per
end-to-end check after the run, outside pytest's capture.
"""

import re

import pytest

from raildiag.model import (
    MINUTE_MS,
    Event,
    Incident,
    SubsystemClass,
    build_trace,
)
from raildiag.pipeline import PipelineConfig, run_training
from raildiag.store import DataStore
from raildiag.synth import default_fleet_spec, generate

ANCHOR_MS = 1_700_000_000_000

VERDICTS: list[tuple[int, str]] = []


def record_verdict(num: int, line: str) -> None:
    VERDICTS.append((num, line))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call" or not report.failed:
        return
    match = re.match(r"test_(\d{2})_", item.name)
    if not match or "test_acceptance" not in item.nodeid:
        return
    num = int(match.group(1))
    if not any(n == num for n, _ in VERDICTS):
        VERDICTS.append((num, f"[check {num:02d}] FAIL {item.name} errored early"))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not VERDICTS:
        return
    terminalreporter.section("end-to-end checks")
    for _, line in sorted(VERDICTS):
        terminalreporter.write_line(line)


def trace_at(incident_id, label, codes_minutes, t0=ANCHOR_MS, vehicle="v1", fleet="demo"):
    """Build a trace from (code, minutes-before-incident) pairs."""
    incident = Incident(
        id=incident_id,
        timestamp=t0,
        composition=(vehicle,),
        fleet=fleet,
        label=label,
        label_source="technician" if label else None,
    )
    events = tuple(
        Event(vehicle_id=vehicle, timestamp=t0 - int(m * MINUTE_MS), code=c)
        for c, m in codes_minutes
    )
    return build_trace(events, incident)


def fill_store(root, fleet):
    store = DataStore(root)
    store.append_events(fleet.spec.fleet, fleet.iter_events())
    for incident in fleet.incidents:
        store.record_incident(fleet.spec.fleet, incident)
    return store


@pytest.fixture(scope="session")
def small_spec():
    return default_fleet_spec(
        seed=3,
        n_vehicles=6,
        duration_days=120,
        n_incidents=240,
        events_per_vehicle_per_day=20.0,
        n_noise_codes=40,
    )


@pytest.fixture(scope="session")
def small_fleet(small_spec):
    return generate(small_spec)


@pytest.fixture(scope="session")
def small_store(small_fleet, tmp_path_factory):
    """Read-only store over the small fleet; do not write to it."""
    return fill_store(tmp_path_factory.mktemp("small-store"), small_fleet)


@pytest.fixture(scope="session")
def small_training(small_store, small_fleet):
    """One trained model over the small fleet, not persisted."""
    return run_training(
        small_store, small_fleet.spec.fleet, PipelineConfig(), save=False
    )


@pytest.fixture()
def mutable_store(small_fleet, tmp_path):
    """Fresh store per test for feedback / model persistence."""
    return fill_store(tmp_path / "store", small_fleet)


CLASS_A = SubsystemClass.ETCS
CLASS_B = SubsystemClass.Doors
CLASS_C = SubsystemClass.Brakes
