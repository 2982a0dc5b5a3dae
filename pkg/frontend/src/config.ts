/**
 * Session-scoped settings: API base URL, optional bearer token, and the
 * fleet filter. Nothing else is persisted; views refetch on every change.
 */

const STORAGE_KEY = 'review-ui.settings';

export const SETTINGS_EVENT = 'rd-settings-changed';

export interface Settings {
  /** Origin of the service, e.g. "http://127.0.0.1:8000". Empty = same origin. */
  baseUrl: string;
  /** Bearer token sent with every API request when non-empty. */
  token: string;
  /** Fleet query parameter; empty lets the service apply its default. */
  fleet: string;
}

const DEFAULTS: Settings = { baseUrl: '', token: '', fleet: '' };

export function getSettings(): Settings {
  try {
    const raw = sessionStorage.getItem(STORAGE_KEY);
    if (!raw) return { ...DEFAULTS };
    return { ...DEFAULTS, ...(JSON.parse(raw) as Partial<Settings>) };
  } catch {
    return { ...DEFAULTS };
  }
}

export function updateSettings(patch: Partial<Settings>): Settings {
  const next = { ...getSettings(), ...patch };
  sessionStorage.setItem(STORAGE_KEY, JSON.stringify(next));
  window.dispatchEvent(new CustomEvent(SETTINGS_EVENT, { detail: next }));
  return next;
}
