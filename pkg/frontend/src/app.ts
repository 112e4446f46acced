/** Browser wiring: forms in, rendered panels out.
 *
 * All interesting logic lives in the pure modules (validate, state,
 * render, client); this file only moves values between the DOM and the
 * session state, so it stays untested and boring on purpose.
 */

import { ServiceClient } from "./client.js";
import { renderDiagnostics, renderMemberTable, renderPedigreeDiagram, renderRiskPanel, renderWhatIfTable } from "./render.js";
import {
  addMember,
  affectedFirstDegreeCount,
  clearDeltas,
  initialState,
  promoteDelta,
  queueDelta,
  removeMember,
  setMemberField,
  setRiskFactor,
  setTaus,
  toScoreRequest,
  validate,
  type SessionState,
} from "./state.js";
import { RELATIONS } from "./validate.js";
import type { WhatIfDelta } from "./types.js";

const client = new ServiceClient("");
let state: SessionState = initialState();

function $(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (el === null) throw new Error(`missing #${id}`);
  return el;
}

function readIntInput(id: string): number | null {
  const el = $(id) as HTMLInputElement;
  if (el.value.trim() === "") return null;
  const n = Number(el.value);
  return Number.isInteger(n) ? n : null;
}

function refresh(): void {
  const v = validate(state);
  const parsed = v.pedigree.ok ? v.pedigree.value.members : [];
  $("member-table").innerHTML = renderMemberTable(parsed);
  $("diagram").innerHTML = renderPedigreeDiagram(parsed);
  $("problems").innerHTML =
    renderDiagnostics(v.errors, "error") + renderDiagnostics(v.warnings, "warning");
  $("x4-hint").textContent = `affected first-degree relatives on record: ${affectedFirstDegreeCount(state)}`;
  ($("score-btn") as HTMLButtonElement).disabled = !v.canSubmit;
  ($("whatif-btn") as HTMLButtonElement).disabled = !v.canSubmit || state.deltas.length === 0;
  $("delta-count").textContent = String(state.deltas.length);
}

function update(next: SessionState): void {
  state = next;
  refresh();
}

async function runScore(): Promise<void> {
  const reply = await client.score(toScoreRequest(state));
  if (reply.status === 400) {
    const body = reply.body as unknown as { detail?: { diagnostics?: [] } };
    $("results").innerHTML = renderDiagnostics(body.detail?.diagnostics ?? [], "error");
    return;
  }
  $("results").innerHTML = renderRiskPanel(reply.body);
}

async function runWhatIf(): Promise<void> {
  const reply = await client.whatIf({ base: toScoreRequest(state), deltas: state.deltas });
  if (reply.status !== 200) {
    $("results").innerHTML = `<p class="banner error">what-if request rejected (${reply.status})</p>`;
    return;
  }
  $("results").innerHTML = renderWhatIfTable(reply.body);
}

function wireForm(): void {
  const relSelect = $("add-relation") as HTMLSelectElement;
  for (const r of RELATIONS.filter((r) => r !== "proband")) {
    const opt = document.createElement("option");
    opt.value = r;
    opt.textContent = r.replace(/_/g, " ");
    relSelect.appendChild(opt);
  }

  $("add-member").addEventListener("click", () => {
    const age = readIntInput("add-age") ?? 50;
    update(addMember(state, relSelect.value, age));
  });

  $("member-table").addEventListener("click", (ev) => {
    const row = (ev.target as HTMLElement).closest("tr[data-id]");
    if (row === null) return;
    const id = Number(row.getAttribute("data-id"));
    const field = prompt("field to set (e.g. breast_cancer, alive, genetic_test); empty to remove member");
    if (field === null) return;
    if (field === "") {
      update(removeMember(state, id));
      return;
    }
    const rawValue = prompt(`value for ${field} (JSON; null clears)`);
    if (rawValue === null) return;
    let value: unknown;
    try {
      value = JSON.parse(rawValue);
    } catch {
      value = rawValue;
    }
    update(setMemberField(state, id, field, value));
  });

  for (const [id, field] of [
    ["rf-menarche", "age_at_menarche"],
    ["rf-biopsies", "num_biopsies"],
    ["rf-afb", "age_first_live_birth"],
    ["rf-x4", "affected_first_degree"],
    ["rf-hyperplasia", "atypical_hyperplasia"],
  ] as const) {
    $(id).addEventListener("change", () => update(setRiskFactor(state, field, readIntInput(id))));
  }

  $("tau-input").addEventListener("change", () => {
    const raw = ($("tau-input") as HTMLInputElement).value;
    const taus = raw
      .split(",")
      .map((s) => Number(s.trim()))
      .filter((n) => Number.isInteger(n) && n > 0);
    if (taus.length > 0) update(setTaus(state, taus));
  });

  $("queue-delta").addEventListener("click", () => {
    const raw = prompt('delta as JSON, e.g. {"op":"set_risk_factor","field":"num_biopsies","value":0}');
    if (raw === null) return;
    try {
      update(queueDelta(state, JSON.parse(raw) as WhatIfDelta));
    } catch {
      alert("not valid JSON");
    }
  });
  $("clear-deltas").addEventListener("click", () => update(clearDeltas(state)));

  $("score-btn").addEventListener("click", () => void runScore());
  $("whatif-btn").addEventListener("click", () => void runWhatIf());

  $("results").addEventListener("click", (ev) => {
    const btn = (ev.target as HTMLElement).closest("button[data-promote]");
    if (btn === null) return;
    const delta = JSON.parse(btn.getAttribute("data-promote") ?? "null") as WhatIfDelta | null;
    if (delta !== null) update(promoteDelta(state, delta));
  });
}

document.addEventListener("DOMContentLoaded", () => {
  wireForm();
  refresh();
  void client.health().then((h) => {
    $("health").textContent = `service: ${JSON.stringify(h.body["status"] ?? "unknown")}`;
  });
});
