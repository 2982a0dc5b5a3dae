"""railctl: drive the diagnostics pipeline offline and serve the API.

Every subcommand prints a human-readable summary to stdout, or one JSON
document with --json. With --out, delimited reports are written to that
directory together with their rendered figures. Exit codes: 0 success,
1 domain error, 2 usage error.
"""

from __future__ import annotations

import csv
import functools
import json
import sys
from pathlib import Path
from typing import Optional

import click

from . import figures
from .bayes import DEFAULT_BETA
from .cascade import EnsembleConfig
from .errors import RailDiagError
from .evaluation import CVConfig, temporal_split
from .features import DEFAULT_OAT_MIN_F1, DEFAULT_TARGET_F1, selection_report_records
from .mining import DEFAULT_MAX_LEN, DEFAULT_MIN_SUPPORT
from .model import (
    event_to_line,
    format_timestamp,
    incident_to_line,
    parse_timestamp,
    read_events_jsonl,
    read_incidents_jsonl,
)
from .pipeline import PipelineConfig, evaluate_artifact, run_training
from .store import DataStore
from .synth import default_fleet_spec, generate, load_spec, save_spec


def _domain_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except RailDiagError as exc:
            click.echo(f"error [{exc.code}]: {exc.message}", err=True)
            sys.exit(1)

    return wrapper


def _emit_json(document) -> None:
    click.echo(json.dumps(document, indent=2, sort_keys=True))


def _write_tsv(path: Path, records: list[dict]) -> None:
    if not records:
        path.write_text("", encoding="utf-8")
        return
    columns = list(records[0].keys())
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, delimiter="\t")
        writer.writeheader()
        writer.writerows(records)


def _parse_instant(value: Optional[str]) -> Optional[int]:
    return None if value is None else parse_timestamp(value)


def _pipeline_config(
    seed: int,
    folds: int,
    beta: float,
    target_f1: float,
    oat_min_f1: float,
    max_len: int,
    min_support: int,
    skip_oat: bool,
    windows: Optional[str] = None,
    singles: bool = True,
) -> PipelineConfig:
    grid = None
    if windows:
        lengths = tuple(int(w.strip()) for w in windows.split(",") if w.strip())
        grid = (EnsembleConfig(windows=lengths, beta=beta),)
    return PipelineConfig(
        cv=CVConfig(k=folds, seed=seed),
        target_f1=target_f1,
        oat_min_f1=oat_min_f1,
        beta=beta,
        max_len=max_len,
        min_support=min_support,
        grid=grid,
        include_single_baselines=singles,
        skip_oat=skip_oat,
    )


@click.group()
@click.version_option(package_name="raildiag", prog_name="railctl")
def main():
    """Incident fault-diagnostics toolkit for vehicle event streams."""


# --- generate ----------------------------------------------------------------


@main.command("generate")
@click.option("--spec", "spec_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@click.option("--seed", type=int, default=None, help="override the spec seed")
@click.option("--json", "as_json", is_flag=True)
@_domain_errors
def generate_cmd(spec_path, out_dir, seed, as_json):
    """Generate a synthetic fleet with planted ground truth."""
    if spec_path:
        spec = load_spec(spec_path)
        if seed is not None:
            spec = type(spec).from_dict({**spec.to_dict(), "seed": seed})
    else:
        spec = default_fleet_spec(seed=seed if seed is not None else 7)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fleet_data = generate(spec)

    with open(out / "events.jsonl", "w", encoding="utf-8") as fh:
        for event in fleet_data.iter_events():
            fh.write(event_to_line(event))
    with open(out / "incidents.jsonl", "w", encoding="utf-8") as fh:
        for incident in fleet_data.incidents:
            fh.write(incident_to_line(incident))
    with open(out / "ground_truth.json", "w", encoding="utf-8") as fh:
        json.dump(fleet_data.ground_truth.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    save_spec(spec, out / "spec.json")

    summary = {
        "fleet": spec.fleet,
        "seed": spec.seed,
        "events": fleet_data.n_events,
        "incidents": len(fleet_data.incidents),
        "out": str(out),
    }
    if as_json:
        _emit_json(summary)
    else:
        click.echo(
            f"generated fleet {spec.fleet!r} (seed {spec.seed}): "
            f"{summary['events']} events, {summary['incidents']} incidents -> {out}"
        )


# --- ingest ------------------------------------------------------------------


@main.command()
@click.option("--events", "event_files", multiple=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--incidents", "incident_files", multiple=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--data", "data_dir", type=click.Path(file_okay=False), required=True)
@click.option("--fleet", default="demo", show_default=True)
@click.option("--json", "as_json", is_flag=True)
@_domain_errors
def ingest(event_files, incident_files, data_dir, fleet, as_json):
    """Load event and incident files into a datastore."""
    store = DataStore(data_dir)
    n_events = 0
    for path in event_files:
        with open(path, "r", encoding="utf-8") as fh:
            n_events += store.append_events(fleet, read_events_jsonl(fh))
    n_incidents = 0
    for path in incident_files:
        with open(path, "r", encoding="utf-8") as fh:
            incidents = read_incidents_jsonl(fh)
        for incident in incidents:
            store.record_incident(incident.fleet or fleet, incident)
            n_incidents += 1
    summary = {"events": n_events, "incidents": n_incidents, "data": str(data_dir)}
    if as_json:
        _emit_json(summary)
    else:
        click.echo(
            f"ingested {n_events} events and {n_incidents} incidents into {data_dir}"
        )


# --- features ----------------------------------------------------------------


def _selection_options(fn):
    fn = click.option("--target-f1", type=float, default=DEFAULT_TARGET_F1,
                      show_default=True)(fn)
    fn = click.option("--oat-min-f1", type=float, default=DEFAULT_OAT_MIN_F1,
                      show_default=True)(fn)
    fn = click.option("--beta", type=float, default=DEFAULT_BETA, show_default=True)(fn)
    fn = click.option("--seed", type=int, default=0, show_default=True)(fn)
    fn = click.option("--folds", type=int, default=10, show_default=True)(fn)
    fn = click.option("--skip-oat", is_flag=True,
                      help="skip the one-at-a-time recovery pass")(fn)
    return fn


@main.command()
@click.option("--data", "data_dir", type=click.Path(exists=True, file_okay=False),
              required=True)
@click.option("--fleet", default="demo", show_default=True)
@_selection_options
@click.option("--out", "out_dir", type=click.Path(file_okay=False))
@click.option("--json", "as_json", is_flag=True)
@_domain_errors
def features(data_dir, fleet, target_f1, oat_min_f1, beta, seed, folds, skip_oat,
             out_dir, as_json):
    """Select the event vocabulary: relevance threshold plus recovery pass."""
    from .features import (
        compute_relevance,
        oat_select,
        select_by_relevance,
        tune_threshold,
    )

    store = DataStore(data_dir)
    traces = store.export_training_set(fleet)
    cv = CVConfig(k=folds, seed=seed)
    relevance = compute_relevance(traces)
    tuning = tune_threshold(traces, cv, target_f1=target_f1, beta=beta,
                            relevance=relevance)
    selection = select_by_relevance(relevance, tuning.threshold)
    oat_report = None
    if not skip_oat:
        selection, oat_report = oat_select(
            traces, selection, cv, min_f1=oat_min_f1, beta=beta, relevance=relevance
        )

    records = selection_report_records(relevance, selection, oat_report)
    summary = {
        "fleet": fleet,
        "incidents": len(traces),
        "threshold": tuning.threshold,
        "reached_target": tuning.reached_target,
        "target_f1": target_f1,
        "codes_total": len(records),
        "codes_kept": len(selection.retained_events),
        "codes_recovered": len(selection.oat_events),
    }
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_tsv(out / "selection.tsv", records)
        _write_tsv(out / "threshold_curve.tsv", tuning.to_records())
        figures.plot_relevance_selection(records, out / "selection.png",
                                         t_r=tuning.threshold)
        figures.plot_threshold_curve(tuning.to_records(), out / "threshold_curve.png",
                                     chosen=tuning.threshold, target_f1=target_f1)
        summary["out"] = str(out)
    if as_json:
        _emit_json({**summary, "selection": records})
    else:
        click.echo(
            f"threshold {tuning.threshold:.2f} "
            f"({'reached' if tuning.reached_target else 'best effort, missed'} "
            f"target F1 {target_f1:.2f}); "
            f"kept {summary['codes_kept']} of {summary['codes_total']} codes, "
            f"recovered {summary['codes_recovered']} one-at-a-time"
        )


# --- mine --------------------------------------------------------------------


@main.command()
@click.option("--data", "data_dir", type=click.Path(exists=True, file_okay=False),
              required=True)
@click.option("--fleet", default="demo", show_default=True)
@click.option("--max-len", type=int, default=DEFAULT_MAX_LEN, show_default=True)
@click.option("--min-support", type=int, default=DEFAULT_MIN_SUPPORT,
              show_default=True)
@_selection_options
@click.option("--out", "out_dir", type=click.Path(file_okay=False))
@click.option("--json", "as_json", is_flag=True)
@_domain_errors
def mine(data_dir, fleet, max_len, min_support, target_f1, oat_min_f1, beta, seed,
         folds, skip_oat, out_dir, as_json):
    """Mine recurrent ordered event sets over the selected vocabulary."""
    from .features import (
        compute_relevance,
        oat_select,
        select_by_relevance,
        tune_threshold,
    )
    from .mining import mine_recurrent_sets, restrict_traces

    store = DataStore(data_dir)
    traces = store.export_training_set(fleet)
    cv = CVConfig(k=folds, seed=seed)
    relevance = compute_relevance(traces)
    tuning = tune_threshold(traces, cv, target_f1=target_f1, beta=beta,
                            relevance=relevance)
    selection = select_by_relevance(relevance, tuning.threshold)
    if not skip_oat:
        selection, _ = oat_select(traces, selection, cv, min_f1=oat_min_f1,
                                  beta=beta, relevance=relevance)

    restricted = restrict_traces(
        ((t.incident.label, t.codes) for t in traces), selection.vocabulary
    )
    mined = mine_recurrent_sets(restricted, max_len=max_len, min_support=min_support)
    records = [f.to_record() for f in mined]
    n_sets = sum(1 for f in mined if f.origin == "mined")
    summary = {
        "fleet": fleet,
        "incidents": len(traces),
        "vocabulary_codes": len(selection.vocabulary),
        "mined_sets": n_sets,
        "singletons": len(mined) - n_sets,
    }
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        flat = [
            {
                "codes": " ".join(r["codes"]),
                "length": len(r["codes"]),
                "origin": r["origin"],
                "total_support": sum(r["support"].values()),
                "support": json.dumps(r["support"], sort_keys=True),
            }
            for r in records
        ]
        _write_tsv(out / "features.tsv", flat)
        summary["out"] = str(out)
    if as_json:
        _emit_json({**summary, "features": records})
    else:
        click.echo(
            f"mined {n_sets} recurrent sets and kept {summary['singletons']} "
            f"singletons over {summary['vocabulary_codes']} selected codes"
        )


# --- train -------------------------------------------------------------------


@main.command()
@click.option("--data", "data_dir", type=click.Path(exists=True, file_okay=False),
              required=True)
@click.option("--fleet", default="demo", show_default=True)
@click.option("--grid", type=click.Choice(["table1", "custom"]), default="table1",
              show_default=True)
@click.option("--windows", default=None,
              help="comma-separated window minutes for --grid custom")
@click.option("--max-len", type=int, default=DEFAULT_MAX_LEN, show_default=True)
@click.option("--min-support", type=int, default=DEFAULT_MIN_SUPPORT,
              show_default=True)
@_selection_options
@click.option("--until", default=None,
              help="train only on incidents up to this instant")
@click.option("--no-singles", is_flag=True,
              help="skip the single-window baselines in the grid report")
@click.option("--out", "out_dir", type=click.Path(file_okay=False))
@click.option("--json", "as_json", is_flag=True)
@_domain_errors
def train(data_dir, fleet, grid, windows, max_len, min_support, target_f1,
          oat_min_f1, beta, seed, folds, skip_oat, until, no_singles, out_dir,
          as_json):
    """Run the full pipeline and save a new model version."""
    if grid == "custom" and not windows:
        raise click.UsageError("--grid custom requires --windows")
    config = _pipeline_config(
        seed, folds, beta, target_f1, oat_min_f1, max_len, min_support, skip_oat,
        windows=windows if grid == "custom" else None,
        singles=not no_singles,
    )
    store = DataStore(data_dir)
    result = run_training(store, fleet, config=config,
                          until=_parse_instant(until), save=True)
    artifact = result.artifact
    summary = {
        "fleet": fleet,
        "version": result.version,
        "content_hash": artifact.content_hash(),
        "best_config": result.grid_report.best.label(),
        "threshold": result.selection.t_r,
        "features": len(result.features),
        "cv_f1_weighted": result.cv_report.f1_weighted,
        "cv_f1_macro": result.cv_report.f1_macro,
        "cv_classified_fraction": result.cv_report.classified_fraction,
        "incidents": result.dataset_size,
        "timings_s": {k: round(v, 3) for k, v in result.timings.items()},
    }
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        grid_records = result.grid_report.to_records()
        _write_tsv(out / "grid.tsv", grid_records)
        figures.plot_window_comparison(grid_records, out / "grid.png")
        selection_records = selection_report_records(
            result.relevance, result.selection, result.oat_report
        )
        _write_tsv(out / "selection.tsv", selection_records)
        figures.plot_relevance_selection(
            selection_records, out / "selection.png", t_r=result.selection.t_r
        )
        _write_tsv(out / "threshold_curve.tsv", result.tuning.to_records())
        figures.plot_threshold_curve(
            result.tuning.to_records(), out / "threshold_curve.png",
            chosen=result.tuning.threshold, target_f1=result.tuning.target_f1,
        )
        figures.plot_confusion(result.cv_report, out / "cv_confusion.png")
        summary["out"] = str(out)
    if as_json:
        _emit_json(summary)
    else:
        click.echo(f"saved model version {result.version} for fleet {fleet!r}")
        click.echo(
            f"best config {summary['best_config']} | cross-validated "
            f"F1 {summary['cv_f1_weighted']:.4f} (macro {summary['cv_f1_macro']:.4f}), "
            f"coverage {summary['cv_classified_fraction']:.3f} "
            f"over {summary['incidents']} incidents"
        )
        click.echo(f"content hash {summary['content_hash']}")


# --- evaluate ------------------------------------------------------------------


@main.command()
@click.option("--data", "data_dir", type=click.Path(exists=True, file_okay=False),
              required=True)
@click.option("--fleet", default="demo", show_default=True)
@click.option("--model", "version", type=int, default=None,
              help="model version to evaluate (default: latest)")
@click.option("--split", default=None,
              help="score only incidents after this instant")
@click.option("--out", "out_dir", type=click.Path(file_okay=False))
@click.option("--json", "as_json", is_flag=True)
@_domain_errors
def evaluate(data_dir, fleet, version, split, out_dir, as_json):
    """Score a saved model against labeled incidents."""
    store = DataStore(data_dir)
    artifact = store.load_model(fleet, version)
    traces = store.export_training_set(fleet)
    split_ms = _parse_instant(split)
    if split_ms is not None:
        _, traces = temporal_split(traces, split_ms)
    report = evaluate_artifact(artifact, traces)
    summary = {
        "fleet": fleet,
        "version": artifact.version,
        "split": format_timestamp(split_ms) if split_ms is not None else None,
        "incidents": len(traces),
        **report.to_dict(),
    }
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "evaluation.tsv").write_text(report.to_table() + "\n",
                                            encoding="utf-8")
        (out / "confusion.tsv").write_text(report.confusion_table() + "\n",
                                           encoding="utf-8")
        figures.plot_confusion(report, out / "confusion.png")
        summary["out"] = str(out)
    if as_json:
        _emit_json(summary)
    else:
        click.echo(report.to_table())
        click.echo("")
        click.echo(report.confusion_table())


# --- predict -------------------------------------------------------------------


@main.command()
@click.option("--data", "data_dir", type=click.Path(exists=True, file_okay=False),
              required=True)
@click.option("--fleet", default="demo", show_default=True)
@click.option("--incident", "incident_id", required=True)
@click.option("--model", "version", type=int, default=None)
@click.option("--json", "as_json", is_flag=True)
@_domain_errors
def predict(data_dir, fleet, incident_id, version, as_json):
    """Produce one suggestion with its matched event sets."""
    from .cascade import predict as predict_trace

    store = DataStore(data_dir)
    artifact = store.load_model(fleet, version)
    incident = store.get_incident(fleet, incident_id)
    suggestion = predict_trace(artifact, store.trace(fleet, incident))
    if as_json:
        _emit_json(suggestion.to_dict())
        return
    if suggestion.outcome == "classified":
        click.echo(
            f"{incident_id}: {suggestion.predicted_class.value} "
            f"(window {suggestion.answered_window_minutes} min, "
            f"model version {artifact.version})"
        )
        for codes in suggestion.matched_features:
            click.echo("  matched: " + " -> ".join(codes))
    else:
        click.echo(f"{incident_id}: Unclassified (no vocabulary event in any window)")


# --- serve ---------------------------------------------------------------------


@main.command()
@click.option("--data", "data_dir", type=click.Path(file_okay=False), required=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--fleet", "default_fleet", default="demo", show_default=True)
@click.option("--token", default=None, help="require this bearer token")
@click.option("--static", "static_dir", type=click.Path(file_okay=False),
              default=None, help="serve a built UI from this directory")
@click.option("--cors", "cors_origins", multiple=True, default=("*",),
              show_default=True)
@_domain_errors
def serve(data_dir, host, port, default_fleet, token, static_dir, cors_origins):
    """Run the HTTP service."""
    import uvicorn

    from .service import ServiceConfig, create_app

    app = create_app(
        ServiceConfig(
            data_dir=data_dir,
            default_fleet=default_fleet,
            cors_origins=tuple(cors_origins),
            bearer_token=token,
            static_dir=static_dir,
        )
    )
    uvicorn.run(app, host=host, port=port, log_level="info")


if __name__ == "__main__":
    main()
