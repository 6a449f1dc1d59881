/** HTML renderers. Pure functions of server-reported data; no computation
 * beyond formatting, so what is displayed is exactly what the service sent. */

import type { Report, TrajectoryRow } from "./api.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Posterior bars, highest probability first, exact decimals on hover. */
export function renderPosterior(names: string[], probs: number[]): string {
  const entries = probs
    .map((value, index) => ({ name: names[index] ?? `model ${index}`, value }))
    .sort((a, b) => b.value - a.value);
  return entries
    .map(({ name, value }, rank) => {
      const pct = (value * 100).toFixed(1);
      const cls = rank === 0 ? "bar top" : "bar";
      return (
        `<div class="${cls}" title="${String(value)}">` +
        `<span class="bar-label">${escapeHtml(name)}</span>` +
        `<span class="bar-track"><span class="bar-fill" style="width:${pct}%"></span></span>` +
        `<span class="bar-value">${value.toFixed(3)}</span>` +
        `</div>`
      );
    })
    .join("");
}

export function renderHistory(rows: TrajectoryRow[], names: string[]): string {
  if (rows.length === 0) {
    return `<p class="muted">No annotations yet.</p>`;
  }
  const body = rows
    .map((row) => {
      const map = names[row.map_best] ?? String(row.map_best);
      const emp =
        row.empirical_best === null ? "—" : names[row.empirical_best] ?? String(row.empirical_best);
      return (
        `<tr><td>${row.step + 1}</td><td>#${row.query}</td>` +
        `<td>${escapeHtml(map)}</td><td>${escapeHtml(emp)}</td></tr>`
      );
    })
    .join("");
  return (
    `<table><thead><tr><th>step</th><th>query</th>` +
    `<th>posterior best</th><th>score best</th></tr></thead>` +
    `<tbody>${body}</tbody></table>`
  );
}

export function renderReport(report: Report): string {
  const names = report.model_names;
  const map = names[report.map_best] ?? String(report.map_best);
  const emp =
    report.empirical_best === null
      ? "no annotations"
      : names[report.empirical_best] ?? String(report.empirical_best);
  return (
    `<div class="report">` +
    `<p>Annotated <b>${report.step}</b> of ${report.budget} queries.</p>` +
    `<p>Posterior pick: <b>${escapeHtml(map)}</b></p>` +
    `<p>Mean-score pick: <b>${escapeHtml(emp)}</b></p>` +
    renderPosterior(names, report.posterior) +
    renderHistory(report.trajectory, names) +
    `</div>`
  );
}

export function renderOutputs(outputs: string[] | undefined, names: string[]): string {
  if (!outputs) {
    return "";
  }
  return (
    `<details open><summary>candidate outputs</summary><ul>` +
    outputs
      .map((text, i) => `<li><b>${escapeHtml(names[i] ?? String(i))}</b>: ${escapeHtml(text)}</li>`)
      .join("") +
    `</ul></details>`
  );
}
