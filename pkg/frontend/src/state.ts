/**
 * Session state and its pure transitions.
 *
 * History is append-only: every submitted (query, report) pair is frozen
 * and kept for side-by-side re-inspection. Constraint edits never touch
 * past entries, and a query can only be built while the band is valid.
 */

import type { CounterfactualRequest, HybridReport } from './types.js';

export interface Constraints {
  fixed: readonly string[];
  pMin: number;
  pMax: number;
  k: number;
  alpha: number;
  beta: number;
  seed: number;
}

export interface HistoryEntry {
  readonly query: CounterfactualRequest;
  readonly report: HybridReport;
}

export interface SessionState {
  patientId: number | null;
  constraints: Constraints;
  lastReport: HybridReport | null;
  history: readonly HistoryEntry[];
  pending: boolean;
}

export const DEFAULT_CONSTRAINTS: Constraints = {
  fixed: [],
  pMin: 0,
  pMax: 0.4,
  k: 3,
  alpha: 1,
  beta: 1,
  seed: 0,
};

export function newSession(threshold?: number): SessionState {
  const constraints = { ...DEFAULT_CONSTRAINTS };
  if (threshold !== undefined && threshold > 0 && threshold <= 1) {
    constraints.pMax = threshold;
  }
  return { patientId: null, constraints, lastReport: null, history: [], pending: false };
}

export function selectPatient(state: SessionState, id: number): SessionState {
  return { ...state, patientId: id, lastReport: null };
}

export function setConstraints(state: SessionState, partial: Partial<Constraints>): SessionState {
  return { ...state, constraints: { ...state.constraints, ...partial } };
}

export function toggleFixed(state: SessionState, feature: string): SessionState {
  const fixed = state.constraints.fixed.includes(feature)
    ? state.constraints.fixed.filter((f) => f !== feature)
    : [...state.constraints.fixed, feature];
  return setConstraints(state, { fixed });
}

/** Human-readable reason the band is invalid, or null when it is fine. */
export function bandError(constraints: Constraints): string | null {
  const { pMin, pMax } = constraints;
  if (!Number.isFinite(pMin) || !Number.isFinite(pMax)) return 'band bounds must be numbers';
  if (pMin < 0 || pMax > 1) return 'band must lie inside [0, 1]';
  if (pMin >= pMax) return 'p_min must be strictly below p_max';
  return null;
}

export function canSubmit(state: SessionState): boolean {
  return state.patientId !== null && !state.pending && bandError(state.constraints) === null;
}

export function buildRequest(state: SessionState): CounterfactualRequest {
  const problem = bandError(state.constraints);
  if (problem !== null) throw new Error(problem);
  if (state.patientId === null) throw new Error('no patient selected');
  const c = state.constraints;
  return {
    row_id: state.patientId,
    target_class: 1,
    p_min: c.pMin,
    p_max: c.pMax,
    fixed: [...c.fixed],
    k: c.k,
    alpha: c.alpha,
    beta: c.beta,
    seed: c.seed,
  };
}

export function appendHistory(
  state: SessionState,
  query: CounterfactualRequest,
  report: HybridReport,
): SessionState {
  const entry: HistoryEntry = Object.freeze({
    query: Object.freeze(structuredClone(query)),
    report: Object.freeze(structuredClone(report)),
  });
  return { ...state, lastReport: report, history: [...state.history, entry] };
}
