/**
 * Suggestion queue: newest first, filterable by status, paged server-side.
 * Disagreements carry their own visual weight so experts see them first.
 */

import { html, LitElement, nothing } from 'lit';
import { fetchQueue } from '../api/resources.js';
import { QUEUE_STATUSES, type QueuePage, type QueueItem, type QueueStatus } from '../api/types.js';
import { getSettings, SETTINGS_EVENT } from '../config.js';
import { formatTimestamp } from '../format.js';
import { describeError, statusBadge } from './bits.js';

const PAGE_SIZE = 20;

export class QueueView extends LitElement {
  static override properties = {
    status: { state: true },
    offset: { state: true },
    page: { state: true },
    loading: { state: true },
    error: { state: true },
  };

  declare status: QueueStatus | '';
  declare offset: number;
  declare page: QueuePage | null;
  declare loading: boolean;
  declare error: string;

  private seq = 0;
  private onSettingsChanged = () => {
    this.offset = 0;
    void this.load();
  };

  constructor() {
    super();
    this.status = '';
    this.offset = 0;
    this.page = null;
    this.loading = false;
    this.error = '';
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
    try {
      const page = await fetchQueue({
        fleet: getSettings().fleet,
        status: this.status,
        limit: PAGE_SIZE,
        offset: this.offset,
      });
      if (ticket !== this.seq) return; // a newer request already answered
      this.page = page;
    } catch (err) {
      if (ticket !== this.seq) return;
      this.error = describeError(err);
    } finally {
      if (ticket === this.seq) this.loading = false;
    }
  }

  private setFilter(status: QueueStatus | '') {
    this.status = status;
    this.offset = 0;
    void this.load();
  }

  private turnPage(delta: number) {
    this.offset = Math.max(0, this.offset + delta);
    void this.load();
  }

  private open(item: QueueItem) {
    window.location.hash = `#/incidents/${encodeURIComponent(item.incident.id)}`;
  }

  private renderRow(item: QueueItem) {
    const suggestion = item.suggestion;
    return html`
      <li
        class="queue-row ${item.status}"
        data-incident=${item.incident.id}
        @click=${() => this.open(item)}
      >
        <div class="queue-main">
          ${statusBadge(item.status)}
          <span class="mono">${item.incident.id}</span>
          <time>${formatTimestamp(item.incident.timestamp)}</time>
          <span class="muted">${item.incident.composition.join(' + ')}</span>
        </div>
        <div class="queue-side">
          ${suggestion && suggestion.outcome === 'classified'
            ? html`<span class="chip suggested">${suggestion.predicted_class}</span>
                <small class="muted">${suggestion.answered_window_minutes} min window</small>`
            : html`<span class="muted">${suggestion ? 'Unclassified' : 'no suggestion'}</span>`}
          ${item.effective_label
            ? html`<span class="label-cell">
                ${item.effective_label}
                <small class="muted">(${item.effective_label_source})</small>
              </span>`
            : nothing}
        </div>
      </li>
    `;
  }

  override render() {
    const page = this.page;
    const shownTo = page ? page.offset + page.items.length : 0;
    return html`
      <section class="view queue-view">
        <div class="filter-bar" role="tablist">
          <button
            class="filter ${this.status === '' ? 'active' : ''}"
            data-status="all"
            @click=${() => this.setFilter('')}
          >
            All
          </button>
          ${QUEUE_STATUSES.map(
            (status) => html`
              <button
                class="filter ${this.status === status ? 'active' : ''}"
                data-status=${status}
                @click=${() => this.setFilter(status)}
              >
                ${status}
              </button>
            `,
          )}
        </div>
        ${this.error ? html`<p class="error">${this.error}</p>` : nothing}
        ${this.loading && !page ? html`<p class="muted">Loading queue…</p>` : nothing}
        ${page
          ? html`
              ${page.items.length === 0
                ? html`<p class="muted empty">No incidents match this filter.</p>`
                : html`<ul class="queue">
                    ${page.items.map((item) => this.renderRow(item))}
                  </ul>`}
              <div class="pager">
                <button
                  class="pager-prev"
                  ?disabled=${page.offset === 0}
                  @click=${() => this.turnPage(-PAGE_SIZE)}
                >
                  Newer
                </button>
                <span class="muted">
                  Showing ${page.items.length === 0 ? 0 : page.offset + 1} to ${shownTo} of
                  ${page.total}
                </span>
                <button
                  class="pager-next"
                  ?disabled=${shownTo >= page.total}
                  @click=${() => this.turnPage(PAGE_SIZE)}
                >
                  Older
                </button>
              </div>
            `
          : nothing}
      </section>
    `;
  }
}

customElements.define('rd-queue', QueueView);
