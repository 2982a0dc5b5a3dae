"""Acceptance gate: twelve end-to-end checks at desk scale, one verdict each.

Desk scale means the pinned default synthetic fleet: 20 vehicles, 540 days,
900 incidents, roughly half a million events, 12 imbalanced classes, seed 7.
Every check prints one PASS/FAIL line; the asserts carry the same text.
"""

import math
import random
import threading
import time
from dataclasses import replace

import pytest
from fastapi.testclient import TestClient

from raildiag.bayes import classify_window, likelihood
from raildiag.cascade import (
    GRID_WINDOW_SEQUENCE,
    EnsembleConfig,
    fit_tables_from_presence,
    predict,
    predict_from_presence,
)
from raildiag.evaluation import CVConfig, temporal_split
from raildiag.features import build_selection
from raildiag.mining import lcss, mine_recurrent_sets, restrict_traces
from raildiag.model import CLASS_ORDER
from raildiag.pipeline import PipelineConfig, evaluate_artifact, run_training
from raildiag.service import ServiceConfig, create_app
from raildiag.synth import DAY_MS, default_fleet_spec, generate
from raildiag.cascade import train_ensemble

from conftest import fill_store, record_verdict
from test_bayes import exact_scores, log_of_fraction, random_table
from test_mining import brute_force_lcs_length


def verdict(num, passed, detail):
    line = f"[check {num:02d}] {'PASS' if passed else 'FAIL'} {detail}"
    record_verdict(num, line)
    print(line)
    assert passed, line


@pytest.fixture(scope="module")
def desk_spec():
    return default_fleet_spec(seed=7)


@pytest.fixture(scope="module")
def desk_fleet(desk_spec):
    return generate(desk_spec)


@pytest.fixture(scope="module")
def desk_store(desk_fleet, tmp_path_factory):
    return fill_store(tmp_path_factory.mktemp("desk"), desk_fleet)


@pytest.fixture(scope="module")
def desk_traces(desk_store, desk_spec):
    return desk_store.export_training_set(desk_spec.fleet)


@pytest.fixture(scope="module")
def desk_training(desk_store, desk_spec):
    return run_training(desk_store, desk_spec.fleet, PipelineConfig(), save=False)


def test_01_likelihood_rows_normalize(desk_training):
    worst = 0.0
    tables = list(desk_training.artifact.tables)
    rng = random.Random(41)
    for _ in range(110):
        tables.append(
            random_table(
                rng,
                n_classes=rng.randint(1, 12),
                n_features=rng.randint(1, 40),
                max_card=rng.randint(0, 200),
            )
        )
    for table in tables:
        for cls in table.classes:
            total = sum(likelihood(table, f, cls) for f in table.vocabulary)
            worst = max(worst, abs(total - 1.0))
    verdict(
        1,
        worst <= 1e-9,
        f"likelihoods sum to 1 per class over {len(tables)} tables "
        f"(worst residual {worst:.2e}, bound 1e-9)",
    )


def test_02_window_scores_match_exact_rational_oracle():
    rng = random.Random(29)
    argmax_hits = 0
    scored = 0
    worst_log = 0.0
    for _ in range(1000):
        n_classes = rng.randint(1, 3)
        n_features = rng.randint(1, 5)
        table = random_table(rng, n_classes=n_classes, n_features=n_features)
        k = rng.randint(1, n_features)
        present_idx = sorted(rng.sample(range(n_features), k))
        present = [table.vocabulary[i] for i in present_idx]

        cls, log_score = classify_window(table, present)
        scores = exact_scores(table, present_idx)
        best = max(scores)
        winners = {table.classes[j] for j, s in enumerate(scores) if s == best}
        if cls in winners:
            argmax_hits += 1
        worst_log = max(worst_log, abs(log_score - log_of_fraction(best)))
        scored += 1
    verdict(
        2,
        argmax_hits == scored == 1000 and worst_log <= 1e-9,
        f"{argmax_hits}/1000 argmax agreements with the exact-rational oracle, "
        f"worst log gap {worst_log:.2e} (bound 1e-9)",
    )


def test_03_lcss_matches_exhaustive_enumeration():
    rng = random.Random(37)
    agreements = 0
    for _ in range(500):
        a = [rng.choice("abcdefg") for _ in range(rng.randint(0, 10))]
        b = [rng.choice("abcdefg") for _ in range(rng.randint(0, 10))]
        if len(lcss(a, b)) == brute_force_lcs_length(a, b):
            agreements += 1
    verdict(3, agreements == 500, f"{agreements}/500 pairs match brute force")


def test_04_planted_signatures_recovered(desk_fleet, desk_traces):
    started = time.monotonic()
    selection, _, _, _ = build_selection(desk_traces, CVConfig())
    restricted = restrict_traces(
        ((t.incident.label, t.codes) for t in desk_traces), selection.vocabulary
    )
    mined = mine_recurrent_sets(restricted)
    elapsed = time.monotonic() - started

    mined_codes = {f.codes for f in mined}
    planted = desk_fleet.ground_truth.planted_signatures(max_len=5)
    recovered = planted & mined_codes
    fraction = len(recovered) / len(planted)
    verdict(
        4,
        fraction >= 0.90 and elapsed < 60.0,
        f"{len(recovered)}/{len(planted)} planted signatures recovered exactly "
        f"({fraction:.1%}, floor 90%) in {elapsed:.1f}s (budget 60s)",
    )


def test_05_holdout_f1_and_coverage(desk_store, desk_spec, desk_traces):
    split_ms = desk_spec.start_time + 360 * DAY_MS
    started = time.monotonic()
    result = run_training(
        desk_store, desk_spec.fleet, PipelineConfig(), until=split_ms, save=False
    )
    _, holdout = temporal_split(desk_traces, split_ms)
    report = evaluate_artifact(result.artifact, holdout)
    elapsed = time.monotonic() - started
    verdict(
        5,
        report.f1_weighted >= 0.80
        and report.classified_fraction >= 0.7
        and elapsed < 300.0,
        f"day-360 holdout ({len(holdout)} incidents): weighted F1 "
        f"{report.f1_weighted:.4f} (floor 0.80), coverage "
        f"{report.classified_fraction:.3f} (floor 0.7), wall {elapsed:.1f}s "
        f"(budget 300s)",
    )


def test_06_cascade_beats_equal_lookback_single(desk_spec, tmp_path_factory):
    contaminated = replace(desk_spec, contamination_rate=0.25)
    fleet_data = generate(contaminated)
    store = fill_store(tmp_path_factory.mktemp("contaminated"), fleet_data)
    result = run_training(store, contaminated.fleet, PipelineConfig(), save=False)

    entries = result.grid_report.entries
    full = next(
        e for e in entries
        if e.kind == "ensemble" and e.config.windows == GRID_WINDOW_SEQUENCE
    )
    single = next(
        e for e in entries if e.kind == "single" and e.config.windows == (240,)
    )
    winner = next(
        e for e in entries
        if e.kind == "ensemble" and e.config == result.grid_report.best
    )
    margin = full.mean_f1 - single.mean_f1
    verdict(
        6,
        margin >= -0.01 and winner.mean_f1 >= single.mean_f1 - 0.01,
        f"with cross-window contamination, the full cascade holds F1 "
        f"{full.mean_f1:.4f} vs {single.mean_f1:.4f} for one flat 240 min window "
        f"(margin {margin:+.4f}, tolerance -0.01); tuned pick "
        f"{winner.config.windows} scores {winner.mean_f1:.4f}",
    )


def test_07_training_fits_time_budget(desk_traces, desk_training):
    artifact = desk_training.artifact
    started = time.monotonic()
    refit = train_ensemble(
        desk_traces,
        artifact.vocabulary,
        artifact.config,
        fleet=artifact.fleet,
        t_r=artifact.t_r,
    )
    elapsed = time.monotonic() - started
    verdict(
        7,
        elapsed <= 10.0 and len(refit.tables) == len(artifact.config.windows),
        f"fitting the tuned ensemble over {len(desk_traces)} incidents took "
        f"{elapsed:.2f}s (budget 10s, grid search excluded)",
    )


def test_08_one_window_cascade_equals_single_classifier(desk_traces, desk_training):
    vocabulary = desk_training.artifact.vocabulary
    config = EnsembleConfig(windows=(240,))
    cascade = train_ensemble(desk_traces, vocabulary, config)
    extractor = cascade.extractor()

    presence = [extractor.extract(trace) for trace in desk_traces]
    labels = [trace.incident.label for trace in desk_traces]
    flat = fit_tables_from_presence(
        presence, labels, n_windows=1, n_features=len(vocabulary), beta=config.beta
    )[0]

    mismatches = 0
    for trace, windows in zip(desk_traces, presence):
        suggestion = predict(cascade, trace)
        direct = classify_window(flat, windows[0])
        if direct is None:
            agree = suggestion.outcome == "unclassified"
        else:
            agree = (
                suggestion.outcome == "classified"
                and suggestion.predicted_class is direct[0]
                and suggestion.log_score == direct[1]
            )
        mismatches += not agree
    verdict(
        8,
        mismatches == 0 and flat.to_dict() == cascade.tables[0].to_dict(),
        f"one-window cascade vs flat classifier: {len(desk_traces) - mismatches}/"
        f"{len(desk_traces)} bitwise-identical decisions, fitted counts equal",
    )


def test_09_vocabulary_pruning_never_adds_classifications(
    desk_traces, desk_training
):
    artifact = desk_training.artifact
    extractor = artifact.extractor()
    presence = {t.incident.id: extractor.extract(t) for t in desk_traces}
    labels = [t.incident.label for t in desk_traces]
    n_windows = len(artifact.config.windows)
    n_features = len(artifact.vocabulary)

    classified_full = {
        i for i, windows in presence.items()
        if predict_from_presence(artifact, i, windows).outcome == "classified"
    }

    def prune(keep):
        position = {old: new for new, old in enumerate(keep)}
        kept = set(keep)
        remapped = {
            i: [
                frozenset(position[f] for f in window if f in kept)
                for window in windows
            ]
            for i, windows in presence.items()
        }
        vocab = tuple(artifact.vocabulary[i] for i in keep)
        tables = fit_tables_from_presence(
            [remapped[t.incident.id] for t in desk_traces],
            labels,
            n_windows=n_windows,
            n_features=len(keep),
            beta=artifact.beta,
        )
        pruned = replace(artifact, vocabulary=vocab, tables=tables)
        return pruned, remapped

    rng = random.Random(53)
    violations = 0
    for _ in range(50):
        size = rng.randint(1, n_features - 1)
        keep = sorted(rng.sample(range(n_features), size))
        pruned, remapped = prune(keep)
        classified = {
            i for i, windows in remapped.items()
            if predict_from_presence(pruned, i, windows).outcome == "classified"
        }
        violations += not classified <= classified_full

    # the index remap must agree with extraction over the pruned vocabulary
    sample_keep = sorted(rng.sample(range(n_features), n_features // 2))
    sample_pruned, sample_remap = prune(sample_keep)
    sample_extract = sample_pruned.extractor()
    for trace in desk_traces[:20]:
        direct = sample_extract.extract(trace)
        assert list(direct) == list(sample_remap[trace.incident.id])

    verdict(
        9,
        violations == 0,
        f"50 random vocabulary prunings never classified an incident the full "
        f"vocabulary ({n_features} features, {len(classified_full)} classified) "
        f"left unclassified",
    )


def test_10_fixed_seed_reproducibility(
    desk_spec, desk_store, desk_traces, desk_training, tmp_path_factory
):
    second_fleet = generate(desk_spec)
    second_store = fill_store(tmp_path_factory.mktemp("desk-again"), second_fleet)
    second = run_training(
        second_store, desk_spec.fleet, PipelineConfig(), save=False
    )

    hash_a = desk_training.artifact.content_hash()
    hash_b = second.artifact.content_hash()
    cv_equal = desk_training.cv_report.to_dict() == second.cv_report.to_dict()

    report_a = evaluate_artifact(desk_training.artifact, desk_traces)
    report_b = evaluate_artifact(
        second.artifact, second_store.export_training_set(desk_spec.fleet)
    )
    eval_equal = report_a.to_dict() == report_b.to_dict()
    verdict(
        10,
        hash_a == hash_b and cv_equal and eval_equal,
        f"regenerate + retrain at seed {desk_spec.seed}: content hashes "
        f"{'match' if hash_a == hash_b else 'differ'} ({hash_a[:12]}...), "
        f"cross-validation reports {'identical' if cv_equal else 'differ'}, "
        f"evaluation reports {'identical' if eval_equal else 'differ'}",
    )


def test_11_service_latency_and_hot_swap(
    desk_fleet, desk_spec, desk_training, tmp_path_factory
):
    fleet = desk_spec.fleet
    root = tmp_path_factory.mktemp("svc-desk")
    store = fill_store(root, desk_fleet)
    store.save_model(desk_training.artifact)

    rotated = {
        cls: CLASS_ORDER[(i + 1) % len(CLASS_ORDER)]
        for i, cls in enumerate(CLASS_ORDER)
    }
    swapped_traces = [
        replace(t, incident=replace(t.incident, label=rotated[t.incident.label]))
        for t in store.export_training_set(fleet)
    ]
    contrarian = train_ensemble(
        swapped_traces,
        desk_training.artifact.vocabulary,
        desk_training.artifact.config,
        fleet=fleet,
        t_r=desk_training.artifact.t_r,
        fingerprint=store.training_fingerprint(fleet),
    )
    store.save_model(contrarian)
    v1 = store.load_model(fleet, 1)
    v2 = store.load_model(fleet, 2)

    app = create_app(ServiceConfig(data_dir=str(root), default_fleet=fleet))
    cache = app.state.cache
    cache.publish(fleet, v1)

    probe = None
    for incident in desk_fleet.incidents:
        trace = store.trace(fleet, incident)
        s1, s2 = predict(v1, trace), predict(v2, trace)
        if (
            s1.outcome == s2.outcome == "classified"
            and s1.predicted_class is not s2.predicted_class
        ):
            probe = (incident, s1.predicted_class.value, s2.predicted_class.value)
            break
    assert probe is not None, "no incident separates the two artifacts"
    incident, label_v1, label_v2 = probe

    def declare(client, incident_id):
        t0 = time.monotonic()
        resp = client.post(
            "/api/v1/incidents",
            json={
                "id": incident_id,
                "timestamp": incident.timestamp,
                "composition": list(incident.composition),
            },
        )
        return resp, time.monotonic() - t0

    client = TestClient(app)
    latencies = []
    for k in range(100):
        resp, took = declare(client, f"lat-{k:03d}")
        assert resp.status_code == 201
        assert resp.json()["suggestion"]["outcome"] == "classified"
        latencies.append(took)
    latencies.sort()
    p95 = latencies[int(math.ceil(0.95 * len(latencies))) - 1]

    valid = {(1, label_v1), (2, label_v2)}
    results = []
    results_lock = threading.Lock()
    stop = threading.Event()

    def flipper():
        artifacts = (v1, v2)
        i = 0
        while not stop.is_set():
            cache.publish(fleet, artifacts[i % 2])
            i += 1
            time.sleep(0.002)

    def worker(worker_id):
        own_client = TestClient(app)
        for k in range(25):
            resp, _ = declare(own_client, f"swap-{worker_id}-{k:02d}")
            body = resp.json()
            with results_lock:
                results.append(
                    (
                        resp.status_code,
                        body["suggestion"]["model_version"],
                        body["suggestion"]["predicted_class"],
                    )
                )

    flip_thread = threading.Thread(target=flipper, daemon=True)
    flip_thread.start()
    workers = [threading.Thread(target=worker, args=(w,)) for w in range(6)]
    for w in workers:
        w.start()
    for w in workers:
        w.join()
    stop.set()
    flip_thread.join()

    violations = [
        r for r in results if r[0] != 201 or (r[1], r[2]) not in valid
    ]
    versions_seen = {r[1] for r in results}
    verdict(
        11,
        p95 < 0.5 and not violations and len(results) == 150,
        f"declare P95 {p95 * 1000:.0f}ms over 100 requests (budget 500ms); "
        f"{len(results)} declares under hot swap saw versions "
        f"{sorted(versions_seen)} with {len(violations)} mixed-version responses",
    )


def test_12_feedback_feeds_retraining(
    desk_fleet, desk_spec, desk_training, tmp_path_factory
):
    fleet = desk_spec.fleet
    root = tmp_path_factory.mktemp("svc-feedback")
    store = fill_store(root, desk_fleet)
    store.save_model(desk_training.artifact)

    app = create_app(ServiceConfig(data_dir=str(root), default_fleet=fleet))
    client = TestClient(app)
    live_store = app.state.store

    target = desk_fleet.incidents[0]
    new_label = next(c for c in CLASS_ORDER if c is not target.label)
    resp = client.post(
        f"/api/v1/incidents/{target.id}/feedback",
        json={"label": new_label.value, "note": "verified on inspection"},
    )
    assert resp.status_code == 200

    exported = {
        t.incident.id: t.incident
        for t in live_store.export_training_set(fleet)
    }
    relabeled = exported[target.id]
    expected_fingerprint = live_store.training_fingerprint(fleet)

    job = client.post("/api/v1/models/retrain").json()
    deadline = time.monotonic() + 300
    while time.monotonic() < deadline:
        job = client.get(f"/api/v1/jobs/{job['id']}").json()
        if job["status"] in ("done", "failed"):
            break
        time.sleep(0.2)
    assert job["status"] == "done", job

    models = client.get("/api/v1/models").json()
    by_version = {e["version"]: e for e in models["versions"]}
    sha_v1 = by_version[1]["fingerprint"]["sha256"]
    sha_v2 = by_version[2]["fingerprint"]["sha256"]
    verdict(
        12,
        relabeled.label is new_label
        and relabeled.label_source == "expert_feedback"
        and models["latest"] == 2
        and sha_v2 == expected_fingerprint["sha256"]
        and sha_v2 != sha_v1,
        f"relabel {target.id} ({target.label.value} -> {new_label.value}) "
        f"reached the training export, retrain published version "
        f"{models['latest']} whose fingerprint {sha_v2[:12]}... covers the "
        f"correction (v1 was {sha_v1[:12]}...)",
    )
