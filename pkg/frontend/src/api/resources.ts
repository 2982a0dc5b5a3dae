/**
 * One function per documented endpoint. The fleet argument is optional
 * everywhere; when empty the service falls back to its default fleet.
 */

import { request } from './client.js';
import type {
  FeedbackResult,
  Health,
  Job,
  MetricsPayload,
  ModelList,
  QueueItem,
  QueuePage,
  QueueStatus,
  TracePayload,
} from './types.js';

export function fetchHealth(): Promise<Health> {
  return request<Health>('/health');
}

export interface QueueQuery {
  fleet?: string;
  status?: QueueStatus | '';
  limit?: number;
  offset?: number;
}

export function fetchQueue(query: QueueQuery = {}): Promise<QueuePage> {
  return request<QueuePage>('/incidents', {
    query: {
      fleet: query.fleet,
      status: query.status || undefined,
      limit: query.limit,
      offset: query.offset,
    },
  });
}

export function fetchSuggestion(incidentId: string, fleet?: string): Promise<QueueItem> {
  return request<QueueItem>(`/incidents/${encodeURIComponent(incidentId)}/suggestion`, {
    query: { fleet },
  });
}

export function fetchTrace(
  incidentId: string,
  fleet?: string,
  windowMinutes?: number,
): Promise<TracePayload> {
  return request<TracePayload>(`/incidents/${encodeURIComponent(incidentId)}/trace`, {
    query: { fleet, window_minutes: windowMinutes },
  });
}

export function sendFeedback(
  incidentId: string,
  label: string,
  note: string,
  fleet?: string,
): Promise<FeedbackResult> {
  return request<FeedbackResult>(`/incidents/${encodeURIComponent(incidentId)}/feedback`, {
    method: 'POST',
    body: { label, note },
    query: { fleet },
  });
}

export function fetchModels(fleet?: string): Promise<ModelList> {
  return request<ModelList>('/models', { query: { fleet } });
}

export function fetchMetrics(fleet?: string, version?: number): Promise<MetricsPayload> {
  return request<MetricsPayload>('/metrics', { query: { fleet, version } });
}

export function startRetrain(fleet?: string): Promise<Job> {
  return request<Job>('/models/retrain', { method: 'POST', query: { fleet } });
}

export function fetchJob(jobId: string): Promise<Job> {
  return request<Job>(`/jobs/${encodeURIComponent(jobId)}`);
}

/**
 * Poll a retrain job until done or failed; reports every observed state.
 */
export async function pollJob(
  jobId: string,
  onUpdate?: (job: Job) => void,
  intervalMs = 500,
): Promise<Job> {
  for (;;) {
    const job = await fetchJob(jobId);
    onUpdate?.(job);
    if (job.status === 'done' || job.status === 'failed') return job;
    await new Promise((resolve) => setTimeout(resolve, intervalMs));
  }
}
