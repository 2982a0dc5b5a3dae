/**
 * API client behaviour against the live fixture service.
 */

import { beforeEach, expect, test } from 'vitest';
import { ApiError, request } from '../src/api/client.js';
import {
  fetchHealth,
  fetchJob,
  fetchMetrics,
  fetchModels,
  fetchQueue,
  fetchSuggestion,
  fetchTrace,
  sendFeedback,
} from '../src/api/resources.js';
import { SUBSYSTEM_CLASSES } from '../src/api/types.js';
import { updateSettings } from '../src/config.js';
import { embedFeature } from '../src/timeline.js';
import { connectToFixture, fixtureFleet, seededIds } from './helpers.js';

beforeEach(() => {
  connectToFixture();
});

test('health reports the seeded fleet', async () => {
  const health = await fetchHealth();
  expect(health.status).toBe('ok');
  expect(health.fleets).toContain(fixtureFleet());
});

test('queue pages are newest first with a consistent total', async () => {
  const page = await fetchQueue({ limit: 50 });
  expect(page.total).toBeGreaterThanOrEqual(240);
  expect(page.items).toHaveLength(50);
  const stamps = page.items.map((item) => Date.parse(item.incident.timestamp));
  for (let i = 1; i < stamps.length; i++) {
    expect(stamps[i]).toBeLessThanOrEqual(stamps[i - 1]!);
  }
});

test('queue pagination slices the same ordering', async () => {
  const wide = await fetchQueue({ limit: 30 });
  const slice = await fetchQueue({ limit: 10, offset: 10 });
  expect(slice.items.map((i) => i.incident.id)).toEqual(
    wide.items.slice(10, 20).map((i) => i.incident.id),
  );
});

test('status filter returns only matching items', async () => {
  const page = await fetchQueue({ status: 'disagreement', limit: 100 });
  expect(page.items.length).toBeGreaterThanOrEqual(1);
  for (const item of page.items) expect(item.status).toBe('disagreement');
  expect(page.items.map((i) => i.incident.id)).toContain(seededIds().disagree2Id);
});

test('suggestion for the classified probe explains itself', async () => {
  const ids = seededIds();
  const item = await fetchSuggestion(ids.classifiedId);
  expect(item.status).toBe('classified');
  const suggestion = item.suggestion!;
  expect(suggestion.outcome).toBe('classified');
  expect(SUBSYSTEM_CLASSES).toContain(suggestion.predicted_class);
  expect(suggestion.predicted_class).toBe(ids.predictedClass);
  expect(suggestion.matched_features.length).toBeGreaterThanOrEqual(1);
  expect(suggestion.answered_window_minutes).toBeGreaterThanOrEqual(5);
  expect(suggestion.model_version).toBeGreaterThanOrEqual(1);
});

test('trace events are ordered and fall inside the window', async () => {
  const ids = seededIds();
  const trace = await fetchTrace(ids.classifiedId);
  expect(trace.window_minutes).toBe(240);
  expect(trace.events.length).toBeGreaterThan(0);
  const incidentMs = Date.parse(trace.incident.timestamp);
  let previous = -Infinity;
  for (const event of trace.events) {
    const ts = Date.parse(event.timestamp);
    expect(ts).toBeGreaterThanOrEqual(previous);
    expect(ts).toBeGreaterThan(incidentMs - 240 * 60_000);
    expect(ts).toBeLessThanOrEqual(incidentMs);
    expect(trace.incident.composition).toContain(event.vehicle_id);
    previous = ts;
  }
});

test('matched features embed into the answering window of the trace', async () => {
  const ids = seededIds();
  const item = await fetchSuggestion(ids.classifiedId);
  const suggestion = item.suggestion!;
  const trace = await fetchTrace(ids.classifiedId);
  const fromMs =
    Date.parse(trace.incident.timestamp) - suggestion.answered_window_minutes! * 60_000;
  for (const feature of suggestion.matched_features) {
    expect(embedFeature(feature, trace.events, fromMs)).not.toBeNull();
  }
});

test('unknown incident raises a typed error', async () => {
  const err = await fetchSuggestion('ghost').catch((e: unknown) => e);
  expect(err).toBeInstanceOf(ApiError);
  expect((err as ApiError).code).toBe('unknown_incident');
  expect((err as ApiError).status).toBe(404);
});

test('invalid queue status is rejected by the service', async () => {
  const err = await request('/incidents', { query: { status: 'bogus' } }).catch((e: unknown) => e);
  expect(err).toBeInstanceOf(ApiError);
  expect((err as ApiError).status).toBe(422);
});

test('feedback confirms the incident and supersedes on repeat', async () => {
  const ids = seededIds();
  const first = await sendFeedback(ids.feedbackId, 'Doors', 'first pass');
  expect(first.status).toBe('confirmed');
  expect(first.effective_label).toBe('Doors');
  const second = await sendFeedback(ids.feedbackId, 'Brakes', 'corrected');
  expect(second.feedback_rank).toBe(first.feedback_rank + 1);
  expect(second.effective_label).toBe('Brakes');
  const item = await fetchSuggestion(ids.feedbackId);
  expect(item.status).toBe('confirmed');
  expect(item.effective_label).toBe('Brakes');
  expect(item.effective_label_source).toBe('expert_feedback');
});

test('model registry lists versions with full eval summaries', async () => {
  const models = await fetchModels();
  expect(models.latest).toBeGreaterThanOrEqual(1);
  expect(models.versions.length).toBeGreaterThanOrEqual(1);
  const entry = models.versions[0]!;
  expect(entry.content_hash).toHaveLength(64);
  expect(entry.fingerprint.sha256).toHaveLength(64);
  expect(entry.fingerprint.incidents).toBeGreaterThanOrEqual(240);
  // rare truth classes are folded into Others for cross-validation, so the
  // report covers at most the twelve classes
  const report = entry.eval_summary.report;
  const rows = Object.keys(report.confusion);
  expect(rows.length).toBeGreaterThanOrEqual(2);
  expect(rows.length).toBeLessThanOrEqual(12);
  for (const cls of rows) {
    expect(SUBSYSTEM_CLASSES).toContain(cls);
  }
  expect(Object.keys(report.per_class).length).toBeGreaterThan(0);
  for (const cls of Object.keys(report.per_class)) {
    expect(SUBSYSTEM_CLASSES).toContain(cls);
  }
});

test('metrics defaults to the latest version', async () => {
  const models = await fetchModels();
  const metrics = await fetchMetrics();
  expect(metrics.version).toBe(models.latest);
  expect(metrics.fleet).toBe(fixtureFleet());
  const report = metrics.eval_summary.report;
  expect(report.f1_weighted).toBeGreaterThan(0);
  expect(report.f1_weighted).toBeLessThanOrEqual(1);
  expect(report.classified_count / report.total_count).toBeCloseTo(
    report.classified_fraction,
    12,
  );
});

test('metrics for an unknown version is a 404', async () => {
  const err = await fetchMetrics(undefined, 99_999).catch((e: unknown) => e);
  expect(err).toBeInstanceOf(ApiError);
  expect((err as ApiError).code).toBe('version_not_found');
});

test('unknown job id is a 404', async () => {
  const err = await fetchJob('nope').catch((e: unknown) => e);
  expect(err).toBeInstanceOf(ApiError);
  expect((err as ApiError).code).toBe('unknown_job');
});

test('network failures surface as ApiError with code network_error', async () => {
  updateSettings({ baseUrl: 'http://127.0.0.1:9' });
  const err = await fetchHealth().catch((e: unknown) => e);
  expect(err).toBeInstanceOf(ApiError);
  expect((err as ApiError).code).toBe('network_error');
});
