/**
 * Wire formats of the api-service endpoints consumed by the explorer.
 * These mirror the server's JSON exactly; the UI never invents fields.
 */

export type CellValue = number | string;

export interface FeatureInfo {
  name: string;
  kind: 'numeric' | 'binary' | 'categorical';
  actionable: boolean;
  domain: CellValue[];
}

export interface SchemaResponse {
  features: FeatureInfo[];
  fingerprint?: string;
}

export interface PatientSummary {
  id: number;
  fields: Record<string, CellValue>;
  risk: number;
  label?: number;
}

export interface PatientsResponse {
  total: number;
  patients: PatientSummary[];
}

export interface PatientDetail {
  id: number;
  values: Record<string, CellValue>;
  proba: number[];
  label?: number;
}

export interface FeatureChange {
  feature: string;
  from: CellValue;
  to: CellValue;
}

export interface CounterfactualEntry {
  stage: string;
  score: number;
  p_origin: number;
  p_target: number;
  distance: number;
  changes: FeatureChange[];
}

export interface HybridReport {
  stage_used: 'enumeration' | 'nice' | 'moc' | 'none';
  m: number;
  candidates_evaluated: number;
  p_origin: number;
  counterfactuals: CounterfactualEntry[];
  timings?: Record<string, number>;
  seed?: number;
}

export interface CounterfactualRequest {
  row_id?: number;
  instance?: Record<string, CellValue>;
  target_class?: number;
  p_min: number;
  p_max: number;
  fixed: string[];
  k: number;
  alpha: number;
  beta: number;
  m_max?: number;
  seed: number;
}

export interface MetricsResponse {
  auroc: number;
  ci_low: number;
  ci_high: number;
  threshold: number;
  sensitivity: number;
  specificity: number;
  roc_points: [number, number, number][];
}

export interface ApiErrorBody {
  code: number;
  message: string;
}
