/**
 * Thin fetch wrapper for the /api/v1 surface: base URL + token from the
 * session settings, JSON bodies, service errors raised as ApiError.
 */

import { getSettings } from '../config.js';

export class ApiError extends Error {
  constructor(
    readonly code: string,
    readonly status: number,
    message: string,
    readonly details: Record<string, unknown> = {},
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

export interface RequestOptions {
  method?: string;
  body?: unknown;
  query?: Record<string, string | number | undefined>;
}

export async function request<T>(path: string, options: RequestOptions = {}): Promise<T> {
  const { baseUrl, token } = getSettings();
  const params = new URLSearchParams();
  for (const [key, value] of Object.entries(options.query ?? {})) {
    if (value !== undefined && value !== '') params.set(key, String(value));
  }
  const query = params.toString();
  const url = `${baseUrl}/api/v1${path}${query ? `?${query}` : ''}`;

  const headers: Record<string, string> = {};
  if (token) headers['authorization'] = `Bearer ${token}`;
  const init: RequestInit = { method: options.method ?? 'GET', headers };
  if (options.body !== undefined) {
    headers['content-type'] = 'application/json';
    init.body = JSON.stringify(options.body);
  }

  let response: Response;
  try {
    response = await fetch(url, init);
  } catch (err) {
    throw new ApiError('network_error', 0, `cannot reach ${url}: ${String(err)}`);
  }

  if (!response.ok) {
    let payload: Record<string, unknown> = {};
    try {
      payload = (await response.json()) as Record<string, unknown>;
    } catch {
      // non-JSON error body; fall through to the generic error
    }
    throw new ApiError(
      typeof payload.code === 'string' ? payload.code : 'http_error',
      response.status,
      typeof payload.message === 'string' ? payload.message : `HTTP ${response.status}`,
      (payload.details as Record<string, unknown>) ?? {},
    );
  }
  return (await response.json()) as T;
}
