/**
 * Geometry for the incident trace timeline: a shared time scale over the
 * lookback window, and the anchoring of matched event sets onto concrete
 * trace events so their chips can sit at the moments they were observed.
 */

import type { EventRecord, TracePayload } from './api/types.js';

export interface TimeScale {
  t0: number;
  incidentMs: number;
  windowMs: number;
}

export function makeScale(trace: TracePayload): TimeScale {
  const incidentMs = Date.parse(trace.incident.timestamp);
  const windowMs = trace.window_minutes * 60_000;
  return { t0: incidentMs - windowMs, incidentMs, windowMs };
}

/** Position within the window as a percentage, clamped to [0, 100]. */
export function percentOf(scale: TimeScale, tsMs: number): number {
  const raw = ((tsMs - scale.t0) / scale.windowMs) * 100;
  return Math.min(100, Math.max(0, raw));
}

/**
 * Earliest embedding of an ordered code set into the trace suffix that
 * starts at `fromMs` (exclusive lower bound, matching window semantics).
 * Returns indices into trace.events, or null when no embedding exists.
 */
export function embedFeature(
  feature: readonly string[],
  events: readonly EventRecord[],
  fromMs: number,
): number[] | null {
  const anchors: number[] = [];
  let next = 0;
  for (let i = 0; i < events.length && next < feature.length; i++) {
    const event = events[i]!;
    if (Date.parse(event.timestamp) <= fromMs) continue;
    if (event.code === feature[next]) {
      anchors.push(i);
      next += 1;
    }
  }
  return next === feature.length ? anchors : null;
}

/** Codes occurring in any matched set, for highlighting trace events. */
export function matchedCodeSet(features: readonly (readonly string[])[]): Set<string> {
  const out = new Set<string>();
  for (const feature of features) for (const code of feature) out.add(code);
  return out;
}
