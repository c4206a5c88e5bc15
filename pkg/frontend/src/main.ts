/**
 * DOM wiring for the explorer: cohort browser, patient constraint panel,
 * results cards, and the history strip. One counterfactual request is in
 * flight at a time; controls are disabled while it runs and API errors
 * are surfaced inline next to the run button (or the offending field for
 * 422 responses).
 */

import { ApiClient, ApiError } from './api.js';
import {
  appendHistory,
  bandError,
  buildRequest,
  canSubmit,
  newSession,
  selectPatient,
  setConstraints,
  toggleFixed,
  type SessionState,
} from './state.js';
import {
  comparisonViewModel,
  escapeHtml,
  formatCell,
  formatPercent,
  renderComparisonCards,
  renderHistoryStrip,
  renderPatientRows,
} from './render.js';
import type { FeatureInfo, PatientSummary } from './types.js';

const api = new ApiClient('');
let state: SessionState = newSession();
let features: FeatureInfo[] = [];
let patients: PatientSummary[] = [];
let sortKey: 'id' | 'risk' = 'risk';
let sortDesc = true;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function setState(next: SessionState): void {
  state = next;
  paint();
}

function sortedPatients(): PatientSummary[] {
  const out = [...patients];
  out.sort((a, b) => {
    const va = sortKey === 'id' ? a.id : a.risk;
    const vb = sortKey === 'id' ? b.id : b.risk;
    return sortDesc ? vb - va : va - vb;
  });
  return out;
}

function paintPatients(): void {
  const head = ['id', ...Object.keys(patients[0]?.fields ?? {}), 'risk']
    .map((h) => `<th data-sort="${h === 'risk' ? 'risk' : h === 'id' ? 'id' : ''}">${escapeHtml(h)}</th>`)
    .join('');
  el('patient-head').innerHTML = `<tr>${head}</tr>`;
  el('patient-body').innerHTML = renderPatientRows(sortedPatients());
  for (const row of el('patient-body').querySelectorAll('tr')) {
    row.addEventListener('click', () => {
      void choosePatient(Number(row.dataset.id));
    });
  }
}

async function choosePatient(id: number): Promise<void> {
  const detail = await api.patient(id);
  setState(selectPatient(state, id));
  const rows = features
    .map((f) => {
      const fixed = state.constraints.fixed.includes(f.name);
      const value = detail.values[f.name];
      return (
        `<tr><td>${escapeHtml(f.name)}</td><td>${escapeHtml(formatCell(value))}</td>` +
        `<td><label><input type="checkbox" data-feature="${escapeHtml(f.name)}" ${fixed ? 'checked' : ''}/> fix</label></td></tr>`
      );
    })
    .join('');
  el('detail-title').textContent =
    `Patient ${id} — current risk ${formatPercent(detail.proba[1] ?? 0)}`;
  el('feature-body').innerHTML = rows;
  for (const box of el('feature-body').querySelectorAll('input[type=checkbox]')) {
    box.addEventListener('change', () => {
      setState(toggleFixed(state, (box as HTMLInputElement).dataset.feature ?? ''));
    });
  }
  el<HTMLElement>('detail-panel').hidden = false;
}

function readControls(): void {
  state = setConstraints(state, {
    pMin: Number(el<HTMLInputElement>('p-min').value),
    pMax: Number(el<HTMLInputElement>('p-max').value),
    k: Number(el<HTMLInputElement>('top-k').value),
    alpha: Number(el<HTMLInputElement>('alpha').value),
    beta: Number(el<HTMLInputElement>('beta').value),
    seed: Number(el<HTMLInputElement>('seed').value),
  });
}

function paint(): void {
  const bandProblem = bandError(state.constraints);
  el('band-error').textContent = bandProblem ?? '';
  const run = el<HTMLButtonElement>('run');
  run.disabled = !canSubmit(state);
  run.textContent = state.pending ? 'searching…' : 'find counterfactuals';
  el('history').innerHTML = renderHistoryStrip(state.history);
  for (const button of el('history').querySelectorAll('button')) {
    button.addEventListener('click', () => {
      const entry = state.history[Number((button as HTMLButtonElement).dataset.index)];
      if (entry) {
        el('results').innerHTML = renderComparisonCards(comparisonViewModel(entry.report));
      }
    });
  }
}

async function submit(): Promise<void> {
  readControls();
  if (!canSubmit(state)) {
    paint();
    return;
  }
  const query = buildRequest(state);
  setState({ ...state, pending: true });
  el('request-error').textContent = '';
  try {
    const report = await api.counterfactuals(query);
    setState({ ...appendHistory(state, query, report), pending: false });
    el('results').innerHTML = renderComparisonCards(comparisonViewModel(report));
  } catch (error) {
    setState({ ...state, pending: false });
    const message =
      error instanceof ApiError ? `${error.code}: ${error.message}` : String(error);
    el('request-error').innerHTML =
      `${escapeHtml(message)} <button id="retry">retry</button>`;
    el('retry')?.addEventListener('click', () => void submit());
  }
}

async function boot(): Promise<void> {
  try {
    const metrics = await api.metrics();
    state = newSession(metrics.threshold);
    el<HTMLInputElement>('p-max').value = String(metrics.threshold.toFixed(3));
    el('model-note').textContent =
      `model AUROC ${metrics.auroc.toFixed(3)} (${metrics.ci_low.toFixed(3)}–${metrics.ci_high.toFixed(3)}), ` +
      `operating threshold ${metrics.threshold.toFixed(3)}`;
  } catch {
    state = newSession();
  }
  const schema = await api.schema();
  features = schema.features;
  patients = (await api.patients(200)).patients;
  paintPatients();
  el('patient-head').addEventListener('click', (event) => {
    const target = event.target as HTMLElement;
    const key = target.dataset.sort;
    if (key === 'risk' || key === 'id') {
      sortDesc = sortKey === key ? !sortDesc : true;
      sortKey = key;
      paintPatients();
    }
  });
  el('run').addEventListener('click', () => void submit());
  for (const id of ['p-min', 'p-max', 'top-k', 'alpha', 'beta', 'seed']) {
    el(id).addEventListener('input', () => {
      readControls();
      paint();
    });
  }
  paint();
}

void boot();
