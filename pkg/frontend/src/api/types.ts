/**
 * Payload shapes of the /api/v1 surface, mirrored field by field.
 * The UI renders these values as received; it never recomputes metrics.
 */

export type QueueStatus = 'classified' | 'unclassified' | 'disagreement' | 'confirmed';

export const QUEUE_STATUSES: QueueStatus[] = [
  'classified',
  'unclassified',
  'disagreement',
  'confirmed',
];

/** The twelve subsystem classes accepted by the feedback endpoint. */
export const SUBSYSTEM_CLASSES = [
  'ETCS',
  'HighOrLowVoltage',
  'Couplings',
  'Doors',
  'Brakes',
  'Communication',
  'AirProduction',
  'Cabling',
  'Body',
  'Traction',
  'Sanitaries',
  'Others',
] as const;

export type SubsystemClass = (typeof SUBSYSTEM_CLASSES)[number];

export interface Health {
  status: string;
  fleets: string[];
}

export interface IncidentRecord {
  id: string;
  timestamp: string;
  composition: string[];
  fleet: string;
  label?: string;
  label_source?: string;
}

export interface EventRecord {
  vehicle_id: string;
  timestamp: string;
  code: string;
  context?: Record<string, unknown>;
}

export interface Suggestion {
  incident_id: string;
  outcome: 'classified' | 'unclassified';
  predicted_class: string | null;
  answered_window_index: number | null;
  answered_window_minutes: number | null;
  matched_features: string[][];
  log_score: number | null;
  model_version: number;
  produced_at: number;
}

export interface QueueItem {
  incident: IncidentRecord;
  suggestion: Suggestion | null;
  status: QueueStatus;
  effective_label: string | null;
  effective_label_source: string | null;
}

export interface QueuePage {
  items: QueueItem[];
  total: number;
  limit: number;
  offset: number;
}

export interface TracePayload {
  incident: IncidentRecord;
  window_minutes: number;
  events: EventRecord[];
}

export interface FeedbackResult {
  incident_id: string;
  effective_label: string;
  feedback_rank: number;
  status: QueueStatus;
}

export type JobStatus = 'pending' | 'running' | 'done' | 'failed';

export interface Job {
  id: string;
  fleet: string;
  status: JobStatus;
  version: number | null;
  error: string | null;
  submitted_at: number;
  finished_at: number | null;
}

export interface PerClassMetrics {
  precision: number;
  recall: number;
  f1: number;
  support: number;
}

export interface EvalReport {
  f1_weighted: number;
  f1_macro: number;
  classified_count: number;
  total_count: number;
  classified_fraction: number;
  per_class: Record<string, PerClassMetrics>;
  confusion: Record<string, Record<string, number>>;
}

/** Identifies the labeled data a model version was trained on. */
export interface TrainingFingerprint {
  sha256: string;
  incidents: number;
  events: number;
  until: number | null;
}

/** Training summary stored with each model version; `report` carries the
 * cross-validated evaluation the UI displays. */
export interface TrainingSummary {
  best_config: string;
  windows: number[];
  cv_f1_weighted: number;
  cv_classified_fraction: number;
  cv_classified_count: number;
  cv_folds: number;
  n_incidents: number;
  n_features: number;
  n_mined: number;
  t_r: number;
  reached_target_f1: boolean;
  report: EvalReport;
  grid: unknown[];
}

export interface ModelVersion {
  version: number;
  created_at: number;
  fingerprint: TrainingFingerprint;
  content_hash: string;
  eval_summary: TrainingSummary;
}

export interface ModelList {
  fleet: string;
  latest: number | null;
  versions: ModelVersion[];
}

export interface MetricsPayload extends ModelVersion {
  fleet: string;
}
