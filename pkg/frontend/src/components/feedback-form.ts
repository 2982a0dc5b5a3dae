/**
 * Expert relabeling form. Submission is optimistic: the parent view gets a
 * feedback-applied event right away, then feedback-settled with the server
 * result, or feedback-rollback when the request fails.
 */

import { html, LitElement, nothing } from 'lit';
import { sendFeedback } from '../api/resources.js';
import { SUBSYSTEM_CLASSES, type FeedbackResult } from '../api/types.js';
import { getSettings } from '../config.js';
import { describeError } from './bits.js';

export interface FeedbackApplied {
  incidentId: string;
  label: string;
}

export interface FeedbackRollback {
  incidentId: string;
  reason: string;
}

export class FeedbackForm extends LitElement {
  static override properties = {
    incidentId: { attribute: false },
    currentLabel: { attribute: false },
    label: { state: true },
    note: { state: true },
    submitting: { state: true },
    error: { state: true },
    lastResult: { state: true },
  };

  declare incidentId: string;
  declare currentLabel: string | null;
  declare label: string;
  declare note: string;
  declare submitting: boolean;
  declare error: string;
  declare lastResult: FeedbackResult | null;

  constructor() {
    super();
    this.incidentId = '';
    this.currentLabel = null;
    this.label = '';
    this.note = '';
    this.submitting = false;
    this.error = '';
    this.lastResult = null;
  }

  override createRenderRoot() {
    return this;
  }

  private emit(name: string, detail: unknown) {
    this.dispatchEvent(new CustomEvent(name, { detail, bubbles: true, composed: true }));
  }

  private async submit(event: Event) {
    event.preventDefault();
    if (!this.label || this.submitting) return;
    const applied: FeedbackApplied = { incidentId: this.incidentId, label: this.label };
    this.submitting = true;
    this.error = '';
    this.emit('feedback-applied', applied);
    try {
      const result = await sendFeedback(
        this.incidentId,
        this.label,
        this.note,
        getSettings().fleet,
      );
      this.lastResult = result;
      this.note = '';
      this.emit('feedback-settled', result);
    } catch (err) {
      this.error = describeError(err);
      const rollback: FeedbackRollback = { incidentId: this.incidentId, reason: this.error };
      this.emit('feedback-rollback', rollback);
    } finally {
      this.submitting = false;
    }
  }

  override render() {
    return html`
      <form class="feedback-form" @submit=${(e: Event) => this.submit(e)}>
        <h3>Expert feedback</h3>
        <label>
          Subsystem class
          <select
            .value=${this.label}
            @change=${(e: Event) => (this.label = (e.target as HTMLSelectElement).value)}
          >
            <option value="" disabled ?selected=${!this.label}>choose a class</option>
            ${SUBSYSTEM_CLASSES.map(
              (cls) => html`<option value=${cls} ?selected=${this.label === cls}>${cls}</option>`,
            )}
          </select>
        </label>
        <label>
          Rationale
          <textarea
            rows="2"
            placeholder="why this label is correct"
            .value=${this.note}
            @input=${(e: Event) => (this.note = (e.target as HTMLTextAreaElement).value)}
          ></textarea>
        </label>
        <div class="feedback-actions">
          <button type="submit" ?disabled=${!this.label || this.submitting}>
            ${this.submitting ? 'Saving…' : 'Submit feedback'}
          </button>
          ${this.lastResult && !this.error
            ? html`<span class="saved">
                Saved as ${this.lastResult.effective_label} (entry #${this.lastResult.feedback_rank})
              </span>`
            : nothing}
          ${this.error ? html`<span class="error">${this.error}</span>` : nothing}
        </div>
      </form>
    `;
  }
}

customElements.define('rd-feedback-form', FeedbackForm);
