/**
 * Snapshot fidelity: recorded API responses rendered into comparison
 * cards must show exactly the fixture probabilities rounded to whole
 * percent, keep the server's ordering, and never invent numbers.
 */

import { readFileSync } from 'node:fs';
import { join } from 'node:path';
import { describe, expect, it } from 'vitest';

import {
  comparisonViewModel,
  formatPercent,
  renderComparisonCards,
  renderHistoryStrip,
  renderPatientRows,
} from '../src/render.js';
import type { HybridReport, PatientsResponse } from '../src/types.js';

function fixture<T>(name: string): T {
  const path = join(__dirname, 'fixtures', name);
  return JSON.parse(readFileSync(path, 'utf-8')) as T;
}

const report = fixture<HybridReport>('report_enumeration.json');
const emptyReport = fixture<HybridReport>('report_none.json');
const patients = fixture<PatientsResponse>('patients.json');

describe('comparisonViewModel', () => {
  it('shows every probability as the fixture value rounded to whole percent', () => {
    const view = comparisonViewModel(report);
    expect(view.empty).toBe(false);
    expect(view.rows).toHaveLength(report.counterfactuals.length);
    view.rows.forEach((row, i) => {
      const cf = report.counterfactuals[i];
      expect(row.targetPercent).toBe(`${Math.round(cf.p_target * 100)}%`);
      expect(row.baselinePercent).toBe(`${Math.round(cf.p_origin * 100)}%`);
      expect(row.targetExact).toBe(cf.p_target);
      expect(row.baselineExact).toBe(cf.p_origin);
      expect(row.score).toBe(cf.score);
      expect(row.stage).toBe(cf.stage);
    });
  });

  it('preserves server delivery order', () => {
    const view = comparisonViewModel(report);
    const scores = view.rows.map((r) => r.score);
    expect(scores).toEqual(report.counterfactuals.map((cf) => cf.score));
  });

  it('maps changes with from/to values straight from the response', () => {
    const view = comparisonViewModel(report);
    view.rows.forEach((row, i) => {
      const cf = report.counterfactuals[i];
      expect(row.changes.map((c) => c.feature)).toEqual(cf.changes.map((c) => c.feature));
    });
  });

  it('renders an explicit notice for an empty report', () => {
    const view = comparisonViewModel(emptyReport);
    expect(view.empty).toBe(true);
    expect(view.notice).toBe('no feasible counterfactual under these constraints');
    expect(renderComparisonCards(view)).toContain('no feasible counterfactual');
  });
});

describe('renderComparisonCards', () => {
  it('puts rounded percentages in the cards and exact values in tooltips', () => {
    const html = renderComparisonCards(comparisonViewModel(report));
    for (const cf of report.counterfactuals) {
      expect(html).toContain(`>${Math.round(cf.p_target * 100)}%<`);
      expect(html).toContain(`title="${cf.p_target}"`);
    }
    expect(html).toContain(`stage-${report.counterfactuals[0].stage}`);
  });

  it('matches the recorded snapshot', () => {
    expect(renderComparisonCards(comparisonViewModel(report))).toMatchSnapshot();
    expect(renderComparisonCards(comparisonViewModel(emptyReport))).toMatchSnapshot();
  });
});

describe('renderPatientRows', () => {
  it('shows each patient risk rounded to whole percent', () => {
    const html = renderPatientRows(patients.patients);
    for (const p of patients.patients) {
      expect(html).toContain(`title="${p.risk}">${formatPercent(p.risk)}<`);
    }
  });
});

describe('renderHistoryStrip', () => {
  it('labels entries with stage and counterfactual count', () => {
    const html = renderHistoryStrip([
      { query: { p_min: 0, p_max: 0.4, fixed: [], k: 3, alpha: 1, beta: 1, seed: 0 }, report },
    ]);
    expect(html).toContain('#1 enumeration (3)');
  });
});
