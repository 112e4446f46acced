import { readFileSync } from "node:fs";
import { describe, expect, test } from "vitest";

import { renderWhatIfTable, describeDelta } from "../src/render.js";
import { applyDelta } from "../src/state.js";
import type { WhatIfResponse } from "../src/types.js";

const expected = JSON.parse(
  readFileSync(new URL("../../docs/contract-corpus/whatif-expected.json", import.meta.url), "utf8"),
) as { cases: Record<string, { status: number; body: WhatIfResponse }> };

const names = Object.keys(expected.cases);

describe("what-if table parity", () => {
  test("all corpus responses are covered", () => {
    expect(names.length).toBe(4);
  });

  test.each(names)("%s", (name) => {
    const { status, body } = expected.cases[name]!;
    expect(status).toBe(200);
    const html = renderWhatIfTable(body);

    for (const [model, entry] of Object.entries(body.baseline.models)) {
      if (!entry.eligible) continue;
      for (const risk of Object.values(entry.risks ?? {})) {
        expect(html, `${name} baseline ${model}`).toContain(`<code class="exact">${risk}</code>`);
      }
    }

    for (const row of body.rows) {
      if (row.error !== undefined) {
        if (row.error.message !== undefined) {
          expect(html).toContain(row.error.message);
        } else {
          for (const d of row.error.diagnostics ?? []) expect(html).toContain(d.message);
        }
        continue;
      }
      for (const perTau of Object.values(row.difference ?? {})) {
        for (const diff of Object.values(perTau)) {
          expect(html, `${name} difference ${diff}`).toContain(`<code class="exact">${diff}</code>`);
        }
      }
      for (const entry of Object.values(row.result?.models ?? {})) {
        if (!entry.eligible) continue;
        for (const risk of Object.values(entry.risks ?? {})) {
          expect(html, `${name} result ${risk}`).toContain(`<code class="exact">${risk}</code>`);
        }
      }
    }
  });

  test("a zero difference renders verbatim as 0", () => {
    const body = expected.cases["error-row-keeps-going"]!.body;
    const diffs = body.rows.flatMap((r) => Object.values(r.difference ?? {})).flatMap((m) => Object.values(m));
    expect(diffs).toContain("0");
    expect(renderWhatIfTable(body)).toContain(`<code class="exact">0</code>`);
  });

  test("error rows keep later rows alive", () => {
    const body = expected.cases["error-row-keeps-going"]!.body;
    expect(body.rows[0]!.error?.message).toBe("no member with id 99");
    expect(body.rows[1]!.result).toBeDefined();
    const html = renderWhatIfTable(body);
    expect(html).toContain(`<tr class="error-row">`);
    expect(html).toContain(`<tr class="delta-row">`);
  });
});

describe("delta descriptions", () => {
  test("each op reads as a sentence fragment", () => {
    expect(describeDelta({ op: "set_risk_factor", field: "num_biopsies", value: 0 })).toBe(
      "set num_biopsies to 0",
    );
    expect(describeDelta({ op: "remove_relative", id: 2 })).toBe("remove member 2");
    expect(describeDelta({ op: "set_tau", tau: [10] })).toBe("change horizon to [10]");
  });
});

describe("local delta mirror", () => {
  const base = {
    pedigree: {
      schema_version: 1,
      members: [
        { id: 0, relation: "proband", sex: "female", current_age_or_death_age: 45, alive: true },
        { id: 3, relation: "mother", sex: "female", current_age_or_death_age: 70, alive: true },
      ],
    },
    riskFactors: { num_biopsies: 1 } as Record<string, unknown>,
    taus: [5],
  };

  test("set_risk_factor null removes the key", () => {
    const out = applyDelta(base, { op: "set_risk_factor", field: "num_biopsies", value: null });
    expect("error" in out).toBe(false);
    if (!("error" in out)) expect(out.riskFactors).toEqual({});
  });

  test("add_relative assigns max id plus one", () => {
    const out = applyDelta(base, {
      op: "add_relative",
      member: { relation: "sister", sex: "female", current_age_or_death_age: 44, alive: true },
    });
    expect("error" in out).toBe(false);
    if (!("error" in out)) {
      const members = out.pedigree["members"] as { id: number }[];
      expect(members[members.length - 1]!.id).toBe(4);
    }
  });

  test("remove_relative on a missing id reports the server's message", () => {
    const out = applyDelta(base, { op: "remove_relative", id: 99 });
    expect(out).toEqual({ error: "no member with id 99" });
  });

  test("set_member null clears a field", () => {
    const withOnset = applyDelta(base, { op: "set_member", id: 3, field: "breast_cancer", value: 52 });
    expect("error" in withOnset).toBe(false);
    if ("error" in withOnset) return;
    const members = withOnset.pedigree["members"] as Record<string, unknown>[];
    expect(members[1]!["breast_cancer"]).toBe(52);
    const cleared = applyDelta(
      { ...base, pedigree: withOnset.pedigree },
      { op: "set_member", id: 3, field: "breast_cancer", value: null },
    );
    if (!("error" in cleared)) {
      const after = cleared.pedigree["members"] as Record<string, unknown>[];
      expect("breast_cancer" in after[1]!).toBe(false);
    }
  });

  test("set_tau replaces the horizons", () => {
    const out = applyDelta(base, { op: "set_tau", tau: [10] });
    if (!("error" in out)) expect(out.taus).toEqual([10]);
  });

  test("base documents are never mutated", () => {
    const snapshot = JSON.stringify(base);
    applyDelta(base, { op: "set_member", id: 3, field: "alive", value: false });
    applyDelta(base, { op: "add_relative", member: { relation: "son" } });
    applyDelta(base, { op: "set_risk_factor", field: "num_biopsies", value: 2 });
    expect(JSON.stringify(base)).toBe(snapshot);
  });
});
