/**
 * Confusion heatmap plus per-class precision/recall, rendered verbatim from
 * one evaluation summary payload. Cell shading is presentation only; every
 * cell keeps the raw count in its text and data-value.
 */

import { html, LitElement, nothing, type TemplateResult } from 'lit';
import type { EvalReport } from '../api/types.js';
import { numCell } from './bits.js';

function columnOrder(confusion: Record<string, Record<string, number>>): string[] {
  const rows = Object.keys(confusion);
  const seen = new Set(rows);
  const extras: string[] = [];
  for (const row of rows) {
    for (const col of Object.keys(confusion[row] ?? {})) {
      if (!seen.has(col)) {
        seen.add(col);
        extras.push(col);
      }
    }
  }
  return [...rows, ...extras];
}

export class ConfusionMatrix extends LitElement {
  static override properties = {
    summary: { attribute: false },
  };

  declare summary: EvalReport | null;

  constructor() {
    super();
    this.summary = null;
  }

  override createRenderRoot() {
    return this;
  }

  private renderHeatmap(summary: EvalReport): TemplateResult {
    const confusion = summary.confusion;
    const rows = Object.keys(confusion);
    const columns = columnOrder(confusion);
    return html`
      <div class="matrix-scroll">
        <table class="confusion">
          <thead>
            <tr>
              <th class="corner">true \\ predicted</th>
              ${columns.map((col) => html`<th class="col-label"><span>${col}</span></th>`)}
            </tr>
          </thead>
          <tbody>
            ${rows.map((row) => {
              const cells = confusion[row] ?? {};
              const rowTotal = Object.values(cells).reduce((sum, n) => sum + n, 0);
              return html`
                <tr>
                  <th class="row-label">${row}</th>
                  ${columns.map((col) => {
                    const count = cells[col] ?? 0;
                    const alpha = rowTotal > 0 ? count / rowTotal : 0;
                    return html`<td
                      class="cell ${row === col ? 'diag' : ''}"
                      data-row=${row}
                      data-col=${col}
                      data-value=${String(count)}
                      style="background: rgba(37, 99, 235, ${(alpha * 0.85).toFixed(3)})"
                    >
                      ${count}
                    </td>`;
                  })}
                </tr>
              `;
            })}
          </tbody>
        </table>
      </div>
    `;
  }

  private renderPerClass(summary: EvalReport): TemplateResult {
    const entries = Object.entries(summary.per_class);
    return html`
      <table class="per-class">
        <thead>
          <tr>
            <th>Class</th>
            <th>Precision</th>
            <th>Recall</th>
            <th>F1</th>
            <th>Support</th>
          </tr>
        </thead>
        <tbody>
          ${entries.map(
            ([cls, m]) => html`
              <tr data-class=${cls}>
                <th class="row-label">${cls}</th>
                ${numCell(m.precision)} ${numCell(m.recall)} ${numCell(m.f1)}
                ${numCell(m.support)}
              </tr>
            `,
          )}
        </tbody>
      </table>
    `;
  }

  override render() {
    const summary = this.summary;
    if (!summary) return nothing;
    return html`
      <div class="confusion-wrap">
        ${this.renderHeatmap(summary)}
        ${this.renderPerClass(summary)}
      </div>
    `;
  }
}

customElements.define('rd-confusion', ConfusionMatrix);
