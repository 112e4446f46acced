/** Pure HTML renderers.
 *
 * Every function here maps response data to an HTML string with no DOM
 * access so the parity tests can run against the corpus directly.  Full
 * precision risk strings are rendered verbatim inside
 * <code class="exact"> nodes; rounded percentages are cosmetic copies.
 */

import { asPercent, escapeHtml, signOf, tauLabel } from "./format.js";
import type {
  Diagnostic,
  ModelResult,
  ParsedMemberLike,
  ScoreResponse,
  WhatIfDelta,
  WhatIfResponse,
  WhatIfRow,
} from "./types.js";

const BASE_MODEL_ORDER = ["brcapro", "bcrat", "combined_m"];

/** Base models in service order first, then ensembles alphabetically. */
export function modelOrder(names: string[]): string[] {
  const base = BASE_MODEL_ORDER.filter((n) => names.includes(n));
  const rest = names.filter((n) => !BASE_MODEL_ORDER.includes(n)).sort();
  return [...base, ...rest];
}

const CARRIER_ORDER = ["none", "brca1_only", "brca2_only", "both", "any"];

const CARRIER_LABELS: Record<string, string> = {
  none: "no variant",
  brca1_only: "BRCA1 only",
  brca2_only: "BRCA2 only",
  both: "both variants",
  any: "any variant",
};

function exact(value: string): string {
  return `<code class="exact">${escapeHtml(value)}</code>`;
}

function modelTile(name: string, result: ModelResult, taus: number[]): string {
  if (!result.eligible) {
    return [
      `<div class="tile ineligible" data-model="${escapeHtml(name)}">`,
      `<h3>${escapeHtml(name)}</h3>`,
      `<p class="badge">ineligible</p>`,
      `<p class="reason">${escapeHtml(result.reason ?? "")}</p>`,
      `</div>`,
    ].join("");
  }
  const rows = taus.map((tau) => {
    const risk = result.risks?.[String(tau)];
    if (risk === undefined) return "";
    return [
      `<tr data-model="${escapeHtml(name)}" data-tau="${tau}">`,
      `<th>${tauLabel(tau)}</th>`,
      `<td class="pct">${escapeHtml(asPercent(risk))}</td>`,
      `<td>${exact(risk)}</td>`,
      `</tr>`,
    ].join("");
  });
  return [
    `<div class="tile eligible" data-model="${escapeHtml(name)}">`,
    `<h3>${escapeHtml(name)}</h3>`,
    `<table class="risks"><tbody>${rows.join("")}</tbody></table>`,
    `</div>`,
  ].join("");
}

export function renderRiskPanel(resp: ScoreResponse): string {
  const names = modelOrder(Object.keys(resp.models));
  const tiles = names.map((n) => modelTile(n, resp.models[n]!, resp.tau));
  const banner =
    resp.error === "ineligible"
      ? `<p class="banner error">No requested model is applicable to this case.</p>`
      : "";
  const carriers = CARRIER_ORDER.filter((k) => k in resp.carrier_probabilities).map((k) => {
    const v = resp.carrier_probabilities[k]!;
    return [
      `<div class="carrier" data-genotype="${k}">`,
      `<span class="label">${escapeHtml(CARRIER_LABELS[k] ?? k)}</span>`,
      `<span class="pct">${escapeHtml(asPercent(v))}</span>`,
      exact(v),
      `</div>`,
    ].join("");
  });
  return [
    `<section class="risk-panel${resp.error === "ineligible" ? " all-ineligible" : ""}">`,
    banner,
    `<div class="tiles">${tiles.join("")}</div>`,
    `<h3>Carrier probabilities</h3>`,
    `<div class="carriers">${carriers.join("")}</div>`,
    `</section>`,
  ].join("");
}

export function renderDiagnostics(items: Diagnostic[], kind: "error" | "warning"): string {
  if (items.length === 0) return "";
  const rows = items.map((d) =>
    [
      `<li class="${kind}" data-field="${escapeHtml(d.field)}"`,
      d.member_id === null ? ">" : ` data-member-id="${d.member_id}">`,
      escapeHtml(d.message),
      `</li>`,
    ].join(""),
  );
  return `<ul class="diagnostics ${kind}s">${rows.join("")}</ul>`;
}

export function describeDelta(delta: WhatIfDelta): string {
  switch (delta.op) {
    case "set_risk_factor":
      return `set ${delta["field"]} to ${JSON.stringify(delta["value"] ?? null)}`;
    case "add_relative":
      return `add ${(delta["member"] as { relation?: string } | undefined)?.relation ?? "relative"}`;
    case "remove_relative":
      return `remove member ${delta["id"]}`;
    case "set_member":
      return `set member ${delta["id"]} ${delta["field"]} to ${JSON.stringify(delta["value"] ?? null)}`;
    case "set_tau":
      return `change horizon to ${JSON.stringify(delta["tau"])}`;
    default:
      return JSON.stringify(delta);
  }
}

function whatIfRow(row: WhatIfRow, models: string[], taus: number[]): string {
  const label = `<th class="delta">${escapeHtml(describeDelta(row.delta))}</th>`;
  if (row.error !== undefined) {
    const detail =
      row.error.message !== undefined
        ? escapeHtml(row.error.message)
        : (row.error.diagnostics ?? []).map((d) => escapeHtml(d.message)).join("; ");
    const span = models.length * taus.length;
    return `<tr class="error-row">${label}<td colspan="${span}">${detail}</td></tr>`;
  }
  const cells: string[] = [];
  for (const model of models) {
    for (const tau of taus) {
      const diff = row.difference?.[model]?.[String(tau)];
      const after = row.result?.models[model]?.risks?.[String(tau)];
      if (diff === undefined || after === undefined) {
        cells.push(`<td class="na" data-model="${escapeHtml(model)}" data-tau="${tau}"></td>`);
        continue;
      }
      cells.push(
        [
          `<td class="diff ${signOf(diff)}" data-model="${escapeHtml(model)}" data-tau="${tau}">`,
          `<span class="pct">${escapeHtml(asPercent(after))}</span>`,
          `<span class="delta-exact">${exact(diff)}</span>`,
          `<span class="after-exact">${exact(after)}</span>`,
          `</td>`,
        ].join(""),
      );
    }
  }
  return `<tr class="delta-row">${label}${cells.join("")}</tr>`;
}

export function renderWhatIfTable(resp: WhatIfResponse): string {
  const taus = resp.baseline.tau;
  const models = modelOrder(
    Object.keys(resp.baseline.models).filter((m) => resp.baseline.models[m]!.eligible),
  );
  const head = models
    .map((m) =>
      taus
        .map((t) => `<th data-model="${escapeHtml(m)}" data-tau="${t}">${escapeHtml(m)} ${tauLabel(t)}</th>`)
        .join(""),
    )
    .join("");
  const baselineCells = models
    .map((m) =>
      taus
        .map((t) => {
          const risk = resp.baseline.models[m]!.risks?.[String(t)];
          if (risk === undefined) return `<td class="na"></td>`;
          return `<td class="baseline" data-model="${escapeHtml(m)}" data-tau="${t}"><span class="pct">${escapeHtml(asPercent(risk))}</span>${exact(risk)}</td>`;
        })
        .join(""),
    )
    .join("");
  const rows = resp.rows.map((r) => whatIfRow(r, models, taus));
  return [
    `<table class="whatif">`,
    `<thead><tr><th>scenario</th>${head}</tr></thead>`,
    `<tbody>`,
    `<tr class="baseline-row"><th>baseline</th>${baselineCells}</tr>`,
    rows.join(""),
    `</tbody>`,
    `</table>`,
  ].join("");
}

const AFFECTED = (m: ParsedMemberLike): boolean =>
  m.breast_cancer !== null || m.ovarian_cancer !== null;

function memberCard(m: ParsedMemberLike): string {
  const marks: string[] = [];
  if (m.breast_cancer !== null) marks.push(`BC@${m.breast_cancer}`);
  if (m.ovarian_cancer !== null) marks.push(`OC@${m.ovarian_cancer}`);
  if (m.genetic_test !== null) marks.push(m.genetic_test);
  return [
    `<div class="person ${m.sex}${AFFECTED(m) ? " affected" : ""}${m.alive ? "" : " deceased"}" data-id="${m.id}">`,
    `<span class="rel">${escapeHtml(m.relation.replace(/_/g, " "))}</span>`,
    `<span class="age">${m.alive ? "" : "d."}${m.current_age_or_death_age}</span>`,
    marks.length > 0 ? `<span class="marks">${escapeHtml(marks.join(" "))}</span>` : "",
    `</div>`,
  ].join("");
}

const GENERATIONS: [string, string[]][] = [
  ["grandparents", [
    "maternal_grandmother", "maternal_grandfather",
    "paternal_grandmother", "paternal_grandfather",
  ]],
  ["parents", ["mother", "father", "maternal_aunt", "maternal_uncle", "paternal_aunt", "paternal_uncle"]],
  ["proband", ["proband", "sister", "brother"]],
  ["children", ["daughter", "son"]],
];

/** Row-per-generation family diagram; document order within a row. */
export function renderPedigreeDiagram(members: ParsedMemberLike[]): string {
  const rows = GENERATIONS.map(([name, relations]) => {
    const people = members.filter((m) => relations.includes(m.relation));
    if (people.length === 0) return "";
    return `<div class="generation" data-generation="${name}">${people.map(memberCard).join("")}</div>`;
  }).filter((r) => r !== "");
  return `<div class="pedigree-diagram">${rows.join("")}</div>`;
}

export function renderMemberTable(members: ParsedMemberLike[]): string {
  const rows = members.map((m) =>
    [
      `<tr data-id="${m.id}">`,
      `<td>${m.id}</td>`,
      `<td>${escapeHtml(m.relation)}</td>`,
      `<td>${m.current_age_or_death_age}</td>`,
      `<td>${m.alive ? "alive" : "deceased"}</td>`,
      `<td>${m.breast_cancer ?? ""}</td>`,
      `<td>${m.ovarian_cancer ?? ""}</td>`,
      `<td>${m.genetic_test === null ? "" : escapeHtml(m.genetic_test)}</td>`,
      `</tr>`,
    ].join(""),
  );
  return [
    `<table class="members">`,
    `<thead><tr><th>id</th><th>relation</th><th>age</th><th>status</th>`,
    `<th>breast onset</th><th>ovarian onset</th><th>test</th></tr></thead>`,
    `<tbody>${rows.join("")}</tbody></table>`,
  ].join("");
}

/** Pulls the verbatim risk strings back out of rendered markup, keyed
 * "model:tau".  The parity tests compare these against the corpus. */
export function extractExactRisks(html: string): Map<string, string> {
  const out = new Map<string, string>();
  const rowRe = /<tr data-model="([^"]+)" data-tau="([^"]+)">.*?<code class="exact">([^<]*)<\/code>/g;
  for (const m of html.matchAll(rowRe)) {
    out.set(`${m[1]}:${m[2]}`, m[3]!);
  }
  return out;
}
