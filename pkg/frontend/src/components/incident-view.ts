/**
 * Incident detail: the suggestion with its answering window, the matched
 * event sets as ordered code chips anchored over the trace timeline, and
 * the feedback form. Optimistic relabeling rolls back if the POST fails.
 */

import { html, LitElement, nothing, type PropertyValues, type TemplateResult } from 'lit';
import { fetchSuggestion, fetchTrace } from '../api/resources.js';
import type { FeedbackResult, QueueItem, Suggestion, TracePayload } from '../api/types.js';
import { getSettings, SETTINGS_EVENT } from '../config.js';
import { formatOffsetMinutes, formatScore, formatTimestamp } from '../format.js';
import { embedFeature, makeScale, matchedCodeSet, percentOf, type TimeScale } from '../timeline.js';
import { describeError, statusBadge } from './bits.js';
import type { FeedbackApplied, FeedbackRollback } from './feedback-form.js';
import './feedback-form.js';

const MAX_FEATURE_TRACKS = 8;
const CHIP_COLORS = 6;

export class IncidentView extends LitElement {
  static override properties = {
    incidentId: { attribute: false },
    item: { state: true },
    trace: { state: true },
    loading: { state: true },
    error: { state: true },
  };

  declare incidentId: string;
  declare item: QueueItem | null;
  declare trace: TracePayload | null;
  declare loading: boolean;
  declare error: string;

  private seq = 0;
  private beforeFeedback: QueueItem | null = null;
  private onSettingsChanged = () => void this.load();

  constructor() {
    super();
    this.incidentId = '';
    this.item = null;
    this.trace = null;
    this.loading = false;
    this.error = '';
  }

  override createRenderRoot() {
    return this;
  }

  override connectedCallback() {
    super.connectedCallback();
    window.addEventListener(SETTINGS_EVENT, this.onSettingsChanged);
  }

  override disconnectedCallback() {
    window.removeEventListener(SETTINGS_EVENT, this.onSettingsChanged);
    super.disconnectedCallback();
  }

  override willUpdate(changed: PropertyValues) {
    if (changed.has('incidentId') && this.incidentId) void this.load();
  }

  async load() {
    const ticket = ++this.seq;
    this.loading = true;
    this.error = '';
    const fleet = getSettings().fleet;
    try {
      const [item, trace] = await Promise.all([
        fetchSuggestion(this.incidentId, fleet),
        fetchTrace(this.incidentId, fleet),
      ]);
      if (ticket !== this.seq) return;
      this.item = item;
      this.trace = trace;
    } catch (err) {
      if (ticket !== this.seq) return;
      this.error = describeError(err);
      this.item = null;
      this.trace = null;
    } finally {
      if (ticket === this.seq) this.loading = false;
    }
  }

  private onApplied(event: CustomEvent<FeedbackApplied>) {
    if (!this.item) return;
    this.beforeFeedback = this.item;
    this.item = {
      ...this.item,
      status: 'confirmed',
      effective_label: event.detail.label,
      effective_label_source: 'expert_feedback',
    };
  }

  private onSettled(event: CustomEvent<FeedbackResult>) {
    this.beforeFeedback = null;
    if (!this.item) return;
    this.item = {
      ...this.item,
      status: event.detail.status,
      effective_label: event.detail.effective_label,
      effective_label_source: 'expert_feedback',
    };
  }

  private onRollback(_event: CustomEvent<FeedbackRollback>) {
    if (this.beforeFeedback) {
      this.item = this.beforeFeedback;
      this.beforeFeedback = null;
    }
  }

  private renderSuggestionCard(suggestion: Suggestion | null): TemplateResult {
    if (!suggestion) {
      return html`<p class="muted">No suggestion stored for this incident.</p>`;
    }
    if (suggestion.outcome !== 'classified') {
      return html`
        <p>
          The model answered <strong>Unclassified</strong>: no known event pattern was present
          in any lookback window.
        </p>
        <p class="muted">Model version ${suggestion.model_version}</p>
      `;
    }
    return html`
      <p>
        Suggested class
        <span class="chip suggested big">${suggestion.predicted_class}</span>
        from the <strong>${suggestion.answered_window_minutes} minute</strong> window
      </p>
      <p class="muted">
        log score
        <span class="mono" data-value=${String(suggestion.log_score)}>
          ${formatScore(suggestion.log_score)}
        </span>
        · model version ${suggestion.model_version} · produced
        ${formatTimestamp(suggestion.produced_at)}
      </p>
    `;
  }

  private renderChipTracks(
    trace: TracePayload,
    suggestion: Suggestion,
    scale: TimeScale,
  ): TemplateResult {
    const features = suggestion.matched_features;
    const windowMinutes = suggestion.answered_window_minutes ?? trace.window_minutes;
    const fromMs = scale.incidentMs - windowMinutes * 60_000;
    const shown = features.slice(0, MAX_FEATURE_TRACKS);
    return html`
      <div class="feature-tracks">
        ${shown.map((feature, row) => {
          const anchors = embedFeature(feature, trace.events, fromMs);
          const color = `chip-c${row % CHIP_COLORS}`;
          if (!anchors) {
            return html`
              <div class="feature-track unanchored">
                ${feature.map((code) => html`<span class="chip ${color}">${code}</span>`)}
                <small class="muted">order not visible in this window</small>
              </div>
            `;
          }
          return html`
            <div class="feature-track">
              ${anchors.map((eventIndex) => {
                const event = trace.events[eventIndex]!;
                const ts = Date.parse(event.timestamp);
                return html`
                  <span
                    class="chip ${color} anchored"
                    style="left: ${percentOf(scale, ts).toFixed(3)}%"
                    title="${event.code} ${formatOffsetMinutes(ts, scale.incidentMs)} on ${event.vehicle_id}"
                    >${event.code}</span
                  >
                `;
              })}
            </div>
          `;
        })}
        ${features.length > shown.length
          ? html`<p class="muted">and ${features.length - shown.length} more matched sets</p>`
          : nothing}
      </div>
    `;
  }

  private renderTimeline(trace: TracePayload, suggestion: Suggestion | null): TemplateResult {
    const scale = makeScale(trace);
    const highlight = suggestion ? matchedCodeSet(suggestion.matched_features) : new Set<string>();
    const lanes = trace.incident.composition;
    const windowMinutes =
      suggestion && suggestion.outcome === 'classified'
        ? suggestion.answered_window_minutes
        : null;
    const quarters = [4, 3, 2, 1].map((q) => (trace.window_minutes * q) / 4);
    return html`
      <div class="timeline">
        ${suggestion && suggestion.outcome === 'classified'
          ? this.renderChipTracks(trace, suggestion, scale)
          : nothing}
        <div class="timeline-lanes">
          <div class="lane-labels">
            ${lanes.map((vehicle) => html`<span class="lane-label mono">${vehicle}</span>`)}
          </div>
          <div class="lanes-area">
            ${windowMinutes !== null
              ? html`<div
                  class="answer-band"
                  style="left: ${(100 - (windowMinutes / trace.window_minutes) * 100).toFixed(3)}%"
                  title="${windowMinutes} minute answering window"
                ></div>`
              : nothing}
            ${lanes.map(
              (vehicle) => html`
                <div class="lane-track">
                  ${trace.events
                    .filter((event) => event.vehicle_id === vehicle)
                    .map((event) => {
                      const ts = Date.parse(event.timestamp);
                      return html`<span
                        class="dot ${highlight.has(event.code) ? 'hit' : ''}"
                        style="left: ${percentOf(scale, ts).toFixed(3)}%"
                        title="${event.code} ${formatOffsetMinutes(ts, scale.incidentMs)}"
                      ></span>`;
                    })}
                </div>
              `,
            )}
            <div class="incident-line" title="incident declared"></div>
          </div>
        </div>
        <div class="timeline-axis">
          ${quarters.map(
            (minutes) => html`<span
              class="tick"
              style="left: ${(100 - (minutes / trace.window_minutes) * 100).toFixed(3)}%"
              >-${minutes} min</span
            >`,
          )}
          <span class="tick incident-tick" style="left: 100%">incident</span>
        </div>
      </div>
    `;
  }

  override render() {
    const item = this.item;
    return html`
      <section class="view incident-view">
        <p><a href="#/queue">&larr; back to queue</a></p>
        ${this.error ? html`<p class="error">${this.error}</p>` : nothing}
        ${this.loading && !item ? html`<p class="muted">Loading incident…</p>` : nothing}
        ${item
          ? html`
              <header class="incident-header">
                <h2 class="mono">${item.incident.id}</h2>
                ${statusBadge(item.status)}
                <span class="muted">${formatTimestamp(item.incident.timestamp)}</span>
                <span class="muted">${item.incident.composition.join(' + ')}</span>
              </header>
              <div class="incident-label">
                ${item.effective_label
                  ? html`Current label: <strong>${item.effective_label}</strong>
                      <small class="muted">(${item.effective_label_source})</small>`
                  : html`<span class="muted">No label on record.</span>`}
              </div>
              <article class="card suggestion-card">
                <h3>Suggestion</h3>
                ${this.renderSuggestionCard(item.suggestion)}
              </article>
              ${this.trace
                ? html`
                    <article class="card">
                      <h3>Trace (last ${this.trace.window_minutes} minutes,
                        ${this.trace.events.length} events)</h3>
                      ${this.renderTimeline(this.trace, item.suggestion)}
                    </article>
                  `
                : nothing}
              <article class="card">
                <rd-feedback-form
                  .incidentId=${item.incident.id}
                  .currentLabel=${item.effective_label}
                  @feedback-applied=${(e: CustomEvent<FeedbackApplied>) => this.onApplied(e)}
                  @feedback-settled=${(e: CustomEvent<FeedbackResult>) => this.onSettled(e)}
                  @feedback-rollback=${(e: CustomEvent<FeedbackRollback>) => this.onRollback(e)}
                ></rd-feedback-form>
              </article>
            `
          : nothing}
      </section>
    `;
  }
}

customElements.define('rd-incident', IncidentView);
