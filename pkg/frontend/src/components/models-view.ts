/**
 * Model registry and metrics: version table, retrain with job polling, and
 * the confusion view for whichever version is selected (latest by default).
 */

import { html, LitElement, nothing, type TemplateResult } from 'lit';
import { fetchMetrics, fetchModels, pollJob, startRetrain } from '../api/resources.js';
import type { Job, MetricsPayload, ModelList } from '../api/types.js';
import { getSettings, SETTINGS_EVENT } from '../config.js';
import { formatTimestamp } from '../format.js';
import { describeError, numCell } from './bits.js';
import './confusion-matrix.js';

export class ModelsView extends LitElement {
  static override properties = {
    models: { state: true },
    selected: { state: true },
    metrics: { state: true },
    job: { state: true },
    error: { state: true },
    loading: { state: true },
  };

  declare models: ModelList | null;
  declare selected: number | null;
  declare metrics: MetricsPayload | null;
  declare job: Job | null;
  declare error: string;
  declare loading: boolean;

  private seq = 0;
  private onSettingsChanged = () => {
    this.selected = null;
    void this.load();
  };

  constructor() {
    super();
    this.models = null;
    this.selected = null;
    this.metrics = null;
    this.job = null;
    this.error = '';
    this.loading = false;
  }

  override createRenderRoot() {
    return this;
  }

  override connectedCallback() {
    super.connectedCallback();
    window.addEventListener(SETTINGS_EVENT, this.onSettingsChanged);
    void this.load();
  }

  override disconnectedCallback() {
    window.removeEventListener(SETTINGS_EVENT, this.onSettingsChanged);
    super.disconnectedCallback();
  }

  async load() {
    const ticket = ++this.seq;
    this.loading = true;
    this.error = '';
    const fleet = getSettings().fleet;
    try {
      const models = await fetchModels(fleet);
      const version = this.selected ?? models.latest;
      const metrics = version !== null ? await fetchMetrics(fleet, version) : null;
      if (ticket !== this.seq) return;
      this.models = models;
      this.selected = version;
      this.metrics = metrics;
    } catch (err) {
      if (ticket !== this.seq) return;
      this.error = describeError(err);
      this.models = null;
      this.metrics = null;
    } finally {
      if (ticket === this.seq) this.loading = false;
    }
  }

  private async select(version: number) {
    this.selected = version;
    try {
      this.metrics = await fetchMetrics(getSettings().fleet, version);
    } catch (err) {
      this.error = describeError(err);
    }
  }

  private async retrain() {
    if (this.job && (this.job.status === 'pending' || this.job.status === 'running')) return;
    this.error = '';
    try {
      const job = await startRetrain(getSettings().fleet);
      this.job = job;
      const finished = await pollJob(job.id, (update) => {
        this.job = update;
      });
      if (finished.status === 'done') {
        this.selected = finished.version;
        await this.load();
      }
    } catch (err) {
      this.error = describeError(err);
    }
  }

  private renderJobBadge(): TemplateResult | typeof nothing {
    const job = this.job;
    if (!job) return nothing;
    const text =
      job.status === 'done'
        ? `done (version ${job.version})`
        : job.status === 'failed'
          ? `failed: ${job.error ?? 'unknown error'}`
          : job.status;
    return html`<span class="job-badge job-${job.status}" data-job-status=${job.status}>
      ${text}
    </span>`;
  }

  private renderRegistry(models: ModelList): TemplateResult {
    return html`
      <table class="registry">
        <thead>
          <tr>
            <th>Version</th>
            <th>Created</th>
            <th>Weighted F1</th>
            <th>Macro F1</th>
            <th>Classified fraction</th>
            <th>Content hash</th>
          </tr>
        </thead>
        <tbody>
          ${models.versions.map(
            (entry) => html`
              <tr
                class="registry-row ${entry.version === this.selected ? 'selected' : ''}"
                data-version=${String(entry.version)}
                @click=${() => this.select(entry.version)}
              >
                <th class="row-label">
                  v${entry.version}
                  ${entry.version === models.latest
                    ? html`<span class="badge badge-latest">latest</span>`
                    : nothing}
                </th>
                <td>${formatTimestamp(entry.created_at)}</td>
                ${numCell(entry.eval_summary.report.f1_weighted)}
                ${numCell(entry.eval_summary.report.f1_macro)}
                ${numCell(entry.eval_summary.report.classified_fraction)}
                <td class="mono hash" title=${entry.content_hash}>
                  ${entry.content_hash.slice(0, 12)}
                </td>
              </tr>
            `,
          )}
        </tbody>
      </table>
    `;
  }

  private renderHeadline(metrics: MetricsPayload): TemplateResult {
    const summary = metrics.eval_summary.report;
    return html`
      <div class="headline-metrics">
        <div class="metric">
          <span class="metric-name">weighted F1</span>
          <span class="metric-value" data-value=${String(summary.f1_weighted)}>
            ${summary.f1_weighted.toFixed(4)}
          </span>
        </div>
        <div class="metric">
          <span class="metric-name">macro F1</span>
          <span class="metric-value" data-value=${String(summary.f1_macro)}>
            ${summary.f1_macro.toFixed(4)}
          </span>
        </div>
        <div class="metric">
          <span class="metric-name">classified</span>
          <span class="metric-value" data-value=${String(summary.classified_count)}>
            ${summary.classified_count}
          </span>
        </div>
        <div class="metric">
          <span class="metric-name">of total</span>
          <span class="metric-value" data-value=${String(summary.total_count)}>
            ${summary.total_count}
          </span>
        </div>
        <div class="metric">
          <span class="metric-name">classified fraction</span>
          <span class="metric-value" data-value=${String(summary.classified_fraction)}>
            ${summary.classified_fraction.toFixed(4)}
          </span>
        </div>
      </div>
    `;
  }

  override render() {
    return html`
      <section class="view models-view">
        <div class="models-actions">
          <button
            class="retrain"
            ?disabled=${this.job?.status === 'pending' || this.job?.status === 'running'}
            @click=${() => this.retrain()}
          >
            Retrain model
          </button>
          ${this.renderJobBadge()}
        </div>
        ${this.error ? html`<p class="error">${this.error}</p>` : nothing}
        ${this.loading && !this.models ? html`<p class="muted">Loading registry…</p>` : nothing}
        ${this.models
          ? this.models.versions.length === 0
            ? html`<p class="muted">No trained model yet. Retrain to create version 1.</p>`
            : this.renderRegistry(this.models)
          : nothing}
        ${this.metrics
          ? html`
              <article class="card metrics-card" data-metrics-version=${String(this.metrics.version)}>
                <h3>Version ${this.metrics.version} evaluation</h3>
                ${this.renderHeadline(this.metrics)}
                <rd-confusion .summary=${this.metrics.eval_summary.report}></rd-confusion>
              </article>
            `
          : nothing}
      </section>
    `;
  }
}

customElements.define('rd-models', ModelsView);
