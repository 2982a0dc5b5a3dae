/**
 * Display-only formatting. Raw values always travel alongside the formatted
 * text (data-value attributes) so nothing rendered loses API precision.
 */

export function formatTimestamp(value: string | number): string {
  const date = typeof value === 'number' ? new Date(value) : new Date(Date.parse(value));
  if (Number.isNaN(date.getTime())) return String(value);
  return date.toISOString().replace('T', ' ').slice(0, 16) + ' UTC';
}

export function formatScore(value: number | null | undefined, digits = 4): string {
  if (value === null || value === undefined) return 'n/a';
  return value.toFixed(digits);
}

/** Minutes before the incident instant, e.g. "-37 min". */
export function formatOffsetMinutes(eventMs: number, incidentMs: number): string {
  const minutes = Math.round((incidentMs - eventMs) / 60_000);
  return minutes === 0 ? 'at incident' : `-${minutes} min`;
}
