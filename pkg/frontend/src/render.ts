/**
 * Pure view models and HTML fragments.
 *
 * Every number shown to the operator comes straight out of an API
 * response: probabilities are rounded to whole percent for display with
 * the full-precision value kept in the tooltip, scores and distances are
 * printed as delivered, and rows keep the server's order.
 */

import type { HistoryEntry } from './state.js';
import type { CellValue, HybridReport, PatientSummary } from './types.js';

export function formatPercent(p: number): string {
  return `${Math.round(p * 100)}%`;
}

export function formatCell(value: CellValue): string {
  if (typeof value === 'number') {
    return Number.isInteger(value) ? String(value) : value.toFixed(3);
  }
  return String(value);
}

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

export interface ComparisonChange {
  feature: string;
  from: string;
  to: string;
}

export interface ComparisonRow {
  stage: string;
  score: number;
  distance: number;
  baselinePercent: string;
  targetPercent: string;
  baselineExact: number;
  targetExact: number;
  changes: ComparisonChange[];
}

export interface ComparisonView {
  empty: boolean;
  notice: string | null;
  rows: ComparisonRow[];
}

/** Comparison card data for one report; server delivery order is preserved. */
export function comparisonViewModel(report: HybridReport): ComparisonView {
  if (report.stage_used === 'none' || report.counterfactuals.length === 0) {
    return {
      empty: true,
      notice: 'no feasible counterfactual under these constraints',
      rows: [],
    };
  }
  const rows = report.counterfactuals.map((cf) => ({
    stage: cf.stage,
    score: cf.score,
    distance: cf.distance,
    baselinePercent: formatPercent(cf.p_origin),
    targetPercent: formatPercent(cf.p_target),
    baselineExact: cf.p_origin,
    targetExact: cf.p_target,
    changes: cf.changes.map((c) => ({
      feature: c.feature,
      from: formatCell(c.from),
      to: formatCell(c.to),
    })),
  }));
  return { empty: false, notice: null, rows };
}

export function renderComparisonCards(view: ComparisonView): string {
  if (view.empty) {
    return `<p class="notice">${escapeHtml(view.notice ?? '')}</p>`;
  }
  const cards = view.rows.map((row, i) => {
    const changes = row.changes
      .map(
        (c) =>
          `<li><span class="feature">${escapeHtml(c.feature)}</span>` +
          ` <span class="from">${escapeHtml(c.from)}</span>` +
          ` &rarr; <span class="to">${escapeHtml(c.to)}</span></li>`,
      )
      .join('');
    return (
      `<article class="card" data-rank="${i + 1}">` +
      `<header><span class="badge stage-${escapeHtml(row.stage)}">${escapeHtml(row.stage)}</span>` +
      `<span class="risk">` +
      `<span class="pct baseline" title="${row.baselineExact}">${row.baselinePercent}</span>` +
      ` &rarr; ` +
      `<span class="pct target" title="${row.targetExact}">${row.targetPercent}</span>` +
      `</span>` +
      `<span class="score" title="distance ${row.distance}">score ${row.score.toFixed(3)}</span>` +
      `</header>` +
      `<ul class="changes">${changes}</ul>` +
      `</article>`
    );
  });
  return cards.join('\n');
}

export function renderPatientRows(patients: PatientSummary[]): string {
  return patients
    .map((p) => {
      const fields = Object.entries(p.fields)
        .map(([, v]) => `<td>${escapeHtml(formatCell(v))}</td>`)
        .join('');
      return (
        `<tr data-id="${p.id}"><td>${p.id}</td>${fields}` +
        `<td><span class="pct" title="${p.risk}">${formatPercent(p.risk)}</span></td></tr>`
      );
    })
    .join('\n');
}

export function renderHistoryStrip(history: readonly HistoryEntry[]): string {
  return history
    .map((entry, i) => {
      const n = entry.report.counterfactuals.length;
      const fixed = entry.query.fixed.length;
      return (
        `<button class="history-entry" data-index="${i}" title="fixed: ${fixed}">` +
        `#${i + 1} ${escapeHtml(entry.report.stage_used)} (${n})` +
        `</button>`
      );
    })
    .join('');
}
