import { describe, expect, test } from "vitest";

import {
  addMember,
  affectedFirstDegreeCount,
  initialState,
  promoteDelta,
  removeMember,
  setMemberField,
  setRiskFactor,
  setTaus,
  toScoreRequest,
  validate,
} from "../src/state.js";

describe("session state", () => {
  test("starts valid and submittable", () => {
    const v = validate(initialState());
    expect(v.canSubmit).toBe(true);
    expect(v.errors).toEqual([]);
  });

  test("affected first-degree count tracks edits", () => {
    let s = initialState();
    expect(affectedFirstDegreeCount(s)).toBe(0);
    s = addMember(s, "mother", 70);
    s = setMemberField(s, 1, "breast_cancer", 52);
    expect(affectedFirstDegreeCount(s)).toBe(1);
    s = addMember(s, "sister", 44);
    s = setMemberField(s, 2, "breast_cancer", 41);
    expect(affectedFirstDegreeCount(s)).toBe(2);
    s = removeMember(s, 2);
    expect(affectedFirstDegreeCount(s)).toBe(1);
  });

  test("an onset after the current age blocks submission with the server's message", () => {
    let s = initialState();
    s = setMemberField(s, 0, "breast_cancer", 60);
    const v = validate(s);
    expect(v.canSubmit).toBe(false);
    expect(v.errors).toEqual([
      {
        field: "breast_cancer",
        message: "breast_cancer onset age 60 exceeds current_age_or_death_age 40",
        member_id: 0,
      },
    ]);
    const fixed = validate(setMemberField(s, 0, "breast_cancer", 38));
    expect(fixed.canSubmit).toBe(true);
  });

  test("x4 mismatch blocks until the questionnaire agrees with the pedigree", () => {
    let s = initialState();
    s = addMember(s, "mother", 70);
    s = setMemberField(s, 1, "breast_cancer", 52);
    s = setRiskFactor(s, "affected_first_degree", 0);
    const v = validate(s);
    expect(v.canSubmit).toBe(false);
    expect(v.errors[0]!.message).toBe(
      "affected_first_degree 0 does not match the pedigree count 1",
    );
    const agreed = validate(setRiskFactor(s, "affected_first_degree", 1));
    expect(agreed.canSubmit).toBe(true);
  });

  test("age clamp warns without blocking", () => {
    let s = initialState();
    s = addMember(s, "maternal_grandmother", 97);
    const v = validate(s);
    expect(v.canSubmit).toBe(true);
    expect(v.warnings).toEqual([
      {
        field: "current_age_or_death_age",
        message: "current_age_or_death_age 97 exceeds table support; clamped to 94",
        member_id: 1,
      },
    ]);
  });

  test("ids keep incrementing past removals", () => {
    let s = initialState();
    s = addMember(s, "mother", 70);
    s = addMember(s, "sister", 44);
    s = removeMember(s, 1);
    s = addMember(s, "daughter", 20);
    const ids = (s.pedigree["members"] as { id: number }[]).map((m) => m.id);
    expect(ids).toEqual([0, 2, 3]);
  });

  test("score request carries only what differs from the defaults", () => {
    let s = initialState();
    expect(toScoreRequest(s)).toEqual({ pedigree: s.pedigree, tau: [5] });
    s = setTaus(s, [5, 10]);
    s = setRiskFactor(s, "num_biopsies", 1);
    s = { ...s, useFamilyHistory: false, baselineAge: 52 };
    const req = toScoreRequest(s);
    expect(req.tau).toEqual([5, 10]);
    expect(req.risk_factors).toEqual({ num_biopsies: 1 });
    expect(req.a).toBe(52);
    expect(req.use_family_history).toBe(false);
  });

  test("promoting a delta rewrites the working documents", () => {
    let s = initialState();
    s = setRiskFactor(s, "num_biopsies", 2);
    s = promoteDelta(s, { op: "set_risk_factor", field: "num_biopsies", value: 0 });
    expect(s.riskFactors).toEqual({ num_biopsies: 0 });
    s = promoteDelta(s, {
      op: "add_relative",
      member: { relation: "sister", sex: "female", current_age_or_death_age: 44, alive: true, breast_cancer: 38 },
    });
    expect(affectedFirstDegreeCount(s)).toBe(1);
    expect(validate(s).canSubmit).toBe(true);
    // a failing delta leaves the state untouched
    const before = JSON.stringify(s);
    s = promoteDelta(s, { op: "remove_relative", id: 42 });
    expect(JSON.stringify(s)).toBe(before);
  });
});
