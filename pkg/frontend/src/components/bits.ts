/**
 * Small shared template helpers used across views.
 */

import { html, type TemplateResult } from 'lit';
import { ApiError } from '../api/client.js';

export function statusBadge(status: string): TemplateResult {
  return html`<span class="badge badge-${status}">${status}</span>`;
}

/**
 * Numeric table cell: human-readable text plus the untouched API value in
 * data-value, so exactness stays checkable on the rendered DOM.
 */
export function numCell(value: number | null | undefined, digits = 4): TemplateResult {
  if (value === null || value === undefined) {
    return html`<td class="num">n/a</td>`;
  }
  const text = Number.isInteger(value) ? String(value) : value.toFixed(digits);
  return html`<td class="num" data-value=${String(value)}>${text}</td>`;
}

export function describeError(err: unknown): string {
  if (err instanceof ApiError) return `${err.message} [${err.code}]`;
  return String(err);
}
