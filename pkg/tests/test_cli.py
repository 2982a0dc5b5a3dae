"""railctl end to end: corpus files in, reports and figures out."""

import json

import pytest
from click.testing import CliRunner

from raildiag.cli import main
from raildiag.synth import save_spec


@pytest.fixture(scope="module")
def runner():
    return CliRunner()


@pytest.fixture(scope="module")
def corpus(runner, small_spec, tmp_path_factory):
    """Files produced by `railctl generate` from the small spec."""
    root = tmp_path_factory.mktemp("cli-corpus")
    spec_path = root / "spec.json"
    save_spec(small_spec, spec_path)
    result = runner.invoke(
        main,
        ["generate", "--spec", str(spec_path), "--out", str(root / "out"), "--json"],
    )
    assert result.exit_code == 0, result.output
    return root / "out", json.loads(result.stdout)


@pytest.fixture(scope="module")
def data_dir(runner, corpus, small_spec, tmp_path_factory):
    """A datastore loaded by `railctl ingest`."""
    root = tmp_path_factory.mktemp("cli-data") / "store"
    corpus_dir, _ = corpus
    result = runner.invoke(
        main,
        [
            "ingest",
            "--events", str(corpus_dir / "events.jsonl"),
            "--incidents", str(corpus_dir / "incidents.jsonl"),
            "--data", str(root),
            "--fleet", small_spec.fleet,
        ],
    )
    assert result.exit_code == 0, result.output
    return root


@pytest.fixture(scope="module")
def trained(runner, data_dir, small_spec, tmp_path_factory):
    """One `railctl train` run with reports written next to the store."""
    out = tmp_path_factory.mktemp("cli-train")
    result = runner.invoke(
        main,
        [
            "train",
            "--data", str(data_dir),
            "--fleet", small_spec.fleet,
            "--out", str(out),
            "--json",
        ],
    )
    assert result.exit_code == 0, result.output
    return out, json.loads(result.stdout)


def test_generate_writes_complete_corpus(corpus, small_fleet):
    corpus_dir, summary = corpus
    for name in ("events.jsonl", "incidents.jsonl", "ground_truth.json", "spec.json"):
        assert (corpus_dir / name).stat().st_size > 0
    assert summary["events"] == small_fleet.n_events
    assert summary["incidents"] == len(small_fleet.incidents)
    n_lines = sum(1 for _ in open(corpus_dir / "events.jsonl"))
    assert n_lines == small_fleet.n_events


def test_generate_seed_override_changes_stream(runner, corpus, small_spec, tmp_path):
    corpus_dir, _ = corpus
    result = runner.invoke(
        main,
        [
            "generate",
            "--spec", str(corpus_dir / "spec.json"),
            "--seed", str(small_spec.seed + 1),
            "--out", str(tmp_path / "alt"),
            "--json",
        ],
    )
    assert result.exit_code == 0
    assert json.loads(result.stdout)["seed"] == small_spec.seed + 1
    original = (corpus_dir / "events.jsonl").read_text()
    assert (tmp_path / "alt" / "events.jsonl").read_text() != original


def test_ingest_counts(runner, data_dir, corpus, small_fleet, small_spec):
    corpus_dir, _ = corpus
    # re-run into a throwaway store with --json for the summary shape
    result = runner.invoke(
        main,
        [
            "ingest",
            "--events", str(corpus_dir / "events.jsonl"),
            "--incidents", str(corpus_dir / "incidents.jsonl"),
            "--data", str(data_dir.parent / "again"),
            "--fleet", small_spec.fleet,
            "--json",
        ],
    )
    assert result.exit_code == 0
    summary = json.loads(result.stdout)
    assert summary["events"] == small_fleet.n_events
    assert summary["incidents"] == len(small_fleet.incidents)


def test_features_reports_threshold_and_vocabulary(
    runner, data_dir, small_spec, tmp_path
):
    result = runner.invoke(
        main,
        [
            "features",
            "--data", str(data_dir),
            "--fleet", small_spec.fleet,
            "--out", str(tmp_path / "sel"),
            "--json",
        ],
    )
    assert result.exit_code == 0, result.output
    summary = json.loads(result.stdout)
    assert 0.0 <= summary["threshold"] <= 1.0
    assert summary["codes_kept"] >= 1
    assert summary["incidents"] == 240
    assert len(summary["selection"]) == summary["codes_total"]
    for name in ("selection.tsv", "selection.png",
                 "threshold_curve.tsv", "threshold_curve.png"):
        assert (tmp_path / "sel" / name).stat().st_size > 0
    header = (tmp_path / "sel" / "selection.tsv").read_text().splitlines()[0]
    assert header.split("\t")[0] == "code"


def test_mine_emits_feature_table(runner, data_dir, small_spec, tmp_path):
    result = runner.invoke(
        main,
        [
            "mine",
            "--data", str(data_dir),
            "--fleet", small_spec.fleet,
            "--out", str(tmp_path / "mine"),
            "--json",
        ],
    )
    assert result.exit_code == 0, result.output
    summary = json.loads(result.stdout)
    assert summary["mined_sets"] >= 1
    assert summary["singletons"] >= summary["vocabulary_codes"] > 0
    assert len(summary["features"]) == summary["mined_sets"] + summary["singletons"]
    rows = (tmp_path / "mine" / "features.tsv").read_text().splitlines()
    assert rows[0].split("\t") == ["codes", "length", "origin",
                                   "total_support", "support"]
    assert len(rows) == 1 + len(summary["features"])


def test_train_saves_model_and_reports(trained, data_dir, small_spec):
    out, summary = trained
    assert summary["version"] == 1
    assert summary["cv_f1_weighted"] > 0.9
    assert summary["cv_classified_fraction"] > 0.9
    assert len(summary["content_hash"]) == 64
    for name in (
        "grid.tsv", "grid.png",
        "selection.tsv", "selection.png",
        "threshold_curve.tsv", "threshold_curve.png",
        "cv_confusion.png",
    ):
        assert (out / name).stat().st_size > 0
    artifact = data_dir / "models" / small_spec.fleet / "1" / "artifact.json"
    assert artifact.exists()


def test_train_custom_grid_requires_windows(runner, data_dir, small_spec):
    result = runner.invoke(
        main,
        ["train", "--data", str(data_dir), "--fleet", small_spec.fleet,
         "--grid", "custom"],
    )
    assert result.exit_code == 2
    assert "--windows" in result.output + result.stderr


def test_evaluate_scores_saved_model(runner, trained, data_dir, small_spec, tmp_path):
    result = runner.invoke(
        main,
        [
            "evaluate",
            "--data", str(data_dir),
            "--fleet", small_spec.fleet,
            "--out", str(tmp_path / "eval"),
            "--json",
        ],
    )
    assert result.exit_code == 0, result.output
    summary = json.loads(result.stdout)
    assert summary["version"] == 1
    assert summary["incidents"] == 240
    assert 0.0 <= summary["f1_weighted"] <= 1.0
    assert summary["classified_count"] <= summary["total_count"] == 240
    for name in ("evaluation.tsv", "confusion.tsv", "confusion.png"):
        assert (tmp_path / "eval" / name).stat().st_size > 0


def test_evaluate_with_split_narrows_the_holdout(
    runner, trained, data_dir, small_spec, small_fleet
):
    cut = small_fleet.incidents[len(small_fleet.incidents) // 2].timestamp
    result = runner.invoke(
        main,
        [
            "evaluate",
            "--data", str(data_dir),
            "--fleet", small_spec.fleet,
            "--split", str(cut),
            "--json",
        ],
    )
    assert result.exit_code == 0, result.output
    summary = json.loads(result.stdout)
    assert summary["incidents"] < 240
    assert summary["split"] is not None


def test_evaluate_without_model_fails_cleanly(runner, tmp_path):
    (tmp_path / "empty").mkdir()
    result = runner.invoke(main, ["evaluate", "--data", str(tmp_path / "empty")])
    assert result.exit_code == 1
    assert "error [version_not_found]" in result.stderr


def test_predict_renders_matched_sets(
    runner, trained, data_dir, small_spec, small_fleet, small_training
):
    from raildiag.cascade import predict as predict_trace
    from raildiag.model import Event, build_trace

    events = [
        Event(vehicle_id=v, timestamp=ts, code=code)
        for ts, v, code in small_fleet._compact
    ]
    target = None
    for incident in small_fleet.incidents:
        if predict_trace(
            small_training.artifact, build_trace(events, incident)
        ).outcome == "classified":
            target = incident
            break
    assert target is not None

    result = runner.invoke(
        main,
        ["predict", "--data", str(data_dir), "--fleet", small_spec.fleet,
         "--incident", target.id, "--json"],
    )
    assert result.exit_code == 0, result.output
    suggestion = json.loads(result.stdout)
    assert suggestion["incident_id"] == target.id
    assert suggestion["outcome"] == "classified"
    assert suggestion["model_version"] == 1

    plain = runner.invoke(
        main,
        ["predict", "--data", str(data_dir), "--fleet", small_spec.fleet,
         "--incident", target.id],
    )
    assert plain.exit_code == 0
    assert suggestion["predicted_class"] in plain.stdout
    assert "matched:" in plain.stdout


def test_predict_unknown_incident_fails(runner, trained, data_dir, small_spec):
    result = runner.invoke(
        main,
        ["predict", "--data", str(data_dir), "--fleet", small_spec.fleet,
         "--incident", "ghost"],
    )
    assert result.exit_code == 1
    assert "error [unknown_incident]" in result.stderr


def test_usage_errors_exit_2(runner):
    assert runner.invoke(main, ["generate"]).exit_code == 2
    assert runner.invoke(main, ["ingest"]).exit_code == 2
    assert runner.invoke(main, ["train"]).exit_code == 2


def test_help_screens(runner):
    for command in ("generate", "ingest", "features", "mine", "train",
                    "evaluate", "predict", "serve"):
        result = runner.invoke(main, [command, "--help"])
        assert result.exit_code == 0
        assert "--help" in result.stdout
    version = runner.invoke(main, ["--version"])
    assert version.exit_code == 0
    assert "railctl" in version.stdout
