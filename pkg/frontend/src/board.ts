// Diagnosis board rendering: pure view -> HTML string functions. Every number
// shown here comes verbatim from a service payload.

import { escapeHtml, outcomeLabel } from "./format.js";
import type { HistoryEntry, SessionView } from "./types.js";

const COUNTER_KEYS = ["fc", "rd", "cc_tree", "cc_session"] as const;

interface RankedDiagnosis {
  label: string;
  probability: number | null;
}

export function rankedDiagnoses(view: SessionView): RankedDiagnosis[] {
  const entries = view.diagnoses_formatted.map((label, i) => ({
    label,
    probability: view.probabilities ? view.probabilities[i] : null,
  }));
  if (view.probabilities) {
    entries.sort((a, b) => (b.probability ?? 0) - (a.probability ?? 0));
  }
  return entries;
}

export function renderDiagnoses(view: SessionView): string {
  const items = rankedDiagnoses(view)
    .map((d) => {
      const pr = d.probability != null
        ? ` <span class="pr">p=${escapeHtml(String(d.probability))}</span>`
        : "";
      return `<li class="diagnosis">${escapeHtml(d.label)}${pr}</li>`;
    })
    .join("");
  return `<ol class="diagnoses">${items}</ol>`;
}

function renderHistoryDiagnoses(entry: HistoryEntry): string {
  const invalidated = new Set(entry.d_times_formatted);
  return entry.diagnoses_formatted
    .map((label) => {
      const struck = invalidated.has(label);
      const cls = struck ? "diagnosis invalidated" : "diagnosis";
      const text = escapeHtml(label);
      return struck ? `<s class="${cls}">${text}</s>` : `<span class="${cls}">${text}</span>`;
    })
    .join(", ");
}

function renderCounterDelta(entry: HistoryEntry): string {
  return COUNTER_KEYS
    .map((key) => `${key} +${entry.counters_delta[key] ?? 0}`)
    .join(" · ");
}

export function renderHistory(view: SessionView): string {
  if (!view.history.length) return `<p class="empty">No iterations yet.</p>`;
  const rows = view.history
    .map((entry) => {
      const measurement = entry.proposed
        ? `<div class="measure">measured <code>${escapeHtml(entry.proposed)}</code>` +
          `${entry.outcome === null ? "" : ` &rarr; ${escapeHtml(outcomeLabel(entry.outcome))}`}</div>`
        : "";
      return `<li class="iteration">
        <div class="iter-head">iteration ${entry.iteration}</div>
        <div class="iter-diagnoses">${renderHistoryDiagnoses(entry)}</div>
        ${measurement}
        <div class="deltas">${renderCounterDelta(entry)}</div>
      </li>`;
    })
    .join("");
  return `<ul class="history">${rows}</ul>`;
}

export function renderCounters(view: SessionView): string {
  const cells = COUNTER_KEYS
    .map((key) => `<span class="counter">${key}=${view.counters[key] ?? 0}</span>`)
    .join(" ");
  return `<div class="counters">${cells}</div>`;
}

export function renderBoard(view: SessionView): string {
  return `
    <section class="board">
      <h3>Leading diagnoses</h3>
      ${renderDiagnoses(view)}
      <h3>Session history</h3>
      ${renderHistory(view)}
      <h3>Reasoner effort</h3>
      ${renderCounters(view)}
    </section>`;
}

export function renderComparePanel(views: SessionView[]): string {
  if (!views.length) return `<p class="empty">Pick sessions to compare.</p>`;
  const header = views
    .map((v) => `<th>${escapeHtml(v.engine)} <small>${escapeHtml(v.id)}</small></th>`)
    .join("");
  const rows = COUNTER_KEYS
    .map((key) => {
      const cells = views
        .map((v) => `<td data-counter="${key}">${v.counters[key] ?? 0}</td>`)
        .join("");
      return `<tr><th>${key}</th>${cells}</tr>`;
    })
    .join("");
  const finals = views
    .map((v) => `<td>${escapeHtml(v.final_formatted ?? v.status)}</td>`)
    .join("");
  return `<table class="compare">
    <thead><tr><th></th>${header}</tr></thead>
    <tbody>${rows}<tr><th>result</th>${finals}</tr></tbody>
  </table>`;
}
