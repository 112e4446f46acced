/** Form state for one counseling session.
 *
 * The working documents are plain JSON mirrors of what gets POSTed, and
 * every mutation revalidates through the ported validator so the form
 * can show inline diagnostics and refuse to submit anything the service
 * would reject.
 */

import {
  countAffectedFirstDegree,
  parsePedigree,
  parseRiskFactors,
  SCHEMA_VERSION,
  SEX_FOR_RELATION,
} from "./validate.js";
import type { ParsedPedigree, ValidationResult, ParsedRiskFactors } from "./validate.js";
import type { Diagnostic, ScoreRequest, WhatIfDelta } from "./types.js";

export interface SessionState {
  pedigree: Record<string, unknown>;
  riskFactors: Record<string, unknown>;
  taus: number[];
  baselineAge: number | null;
  models: string[] | null;
  useFamilyHistory: boolean;
  deltas: WhatIfDelta[];
}

export function initialState(): SessionState {
  return {
    pedigree: {
      schema_version: SCHEMA_VERSION,
      members: [
        { id: 0, relation: "proband", sex: "female", current_age_or_death_age: 40, alive: true },
      ],
    },
    riskFactors: {},
    taus: [5],
    baselineAge: null,
    models: null,
    useFamilyHistory: true,
    deltas: [],
  };
}

function members(state: SessionState): Record<string, unknown>[] {
  const m = state.pedigree["members"];
  return Array.isArray(m) ? (m as Record<string, unknown>[]) : [];
}

function nextId(state: SessionState): number {
  const ids = members(state)
    .map((m) => m["id"])
    .filter((v): v is number => typeof v === "number" && Number.isInteger(v));
  return ids.length === 0 ? 0 : Math.max(...ids) + 1;
}

export function addMember(state: SessionState, relation: string, age: number): SessionState {
  const member: Record<string, unknown> = {
    id: nextId(state),
    relation,
    sex: SEX_FOR_RELATION[relation] ?? "female",
    current_age_or_death_age: age,
    alive: true,
  };
  return {
    ...state,
    pedigree: { ...state.pedigree, members: [...members(state), member] },
  };
}

export function removeMember(state: SessionState, id: number): SessionState {
  return {
    ...state,
    pedigree: { ...state.pedigree, members: members(state).filter((m) => m["id"] !== id) },
  };
}

/** null clears the field entirely, mirroring the service's delta rule. */
export function setMemberField(
  state: SessionState,
  id: number,
  field: string,
  value: unknown,
): SessionState {
  const updated = members(state).map((m) => {
    if (m["id"] !== id) return m;
    const copy = { ...m };
    if (value === null) delete copy[field];
    else copy[field] = value;
    return copy;
  });
  return { ...state, pedigree: { ...state.pedigree, members: updated } };
}

export function setRiskFactor(state: SessionState, field: string, value: unknown): SessionState {
  const rf = { ...state.riskFactors };
  if (value === null) delete rf[field];
  else rf[field] = value;
  return { ...state, riskFactors: rf };
}

export function setTaus(state: SessionState, taus: number[]): SessionState {
  return { ...state, taus: [...taus] };
}

export interface SessionValidation {
  pedigree: ValidationResult<ParsedPedigree>;
  riskFactors: ValidationResult<ParsedRiskFactors>;
  errors: Diagnostic[];
  warnings: Diagnostic[];
  canSubmit: boolean;
}

export function validate(state: SessionState): SessionValidation {
  const ped = parsePedigree(state.pedigree);
  const rf = parseRiskFactors(state.riskFactors, ped.ok ? ped.value : null);
  const errors = [...(ped.ok ? [] : ped.errors), ...(rf.ok ? [] : rf.errors)];
  const warnings = ped.ok ? ped.warnings : [];
  return { pedigree: ped, riskFactors: rf, errors, warnings, canSubmit: errors.length === 0 };
}

/** The count the service will derive and cross-check against x4. */
export function affectedFirstDegreeCount(state: SessionState): number {
  const ped = parsePedigree(state.pedigree);
  return ped.ok ? countAffectedFirstDegree(ped.value) : 0;
}

export function toScoreRequest(state: SessionState): ScoreRequest {
  const req: ScoreRequest = {
    pedigree: state.pedigree,
    tau: state.taus,
  };
  if (Object.keys(state.riskFactors).length > 0) req.risk_factors = state.riskFactors;
  if (state.baselineAge !== null) req.a = state.baselineAge;
  if (state.models !== null) req.models = state.models;
  if (!state.useFamilyHistory) req.use_family_history = false;
  return req;
}

export function queueDelta(state: SessionState, delta: WhatIfDelta): SessionState {
  return { ...state, deltas: [...state.deltas, delta] };
}

export function clearDeltas(state: SessionState): SessionState {
  return { ...state, deltas: [] };
}

function pyRepr(v: unknown): string {
  if (typeof v === "string") return `'${v}'`;
  if (v === null) return "None";
  if (v === true) return "True";
  if (v === false) return "False";
  return String(v);
}

/** Local mirror of the service's delta application, used to promote a
 * what-if row into the working documents.  Same ops, same error text. */
export function applyDelta(
  base: { pedigree: Record<string, unknown>; riskFactors: Record<string, unknown>; taus: number[] },
  delta: WhatIfDelta,
): { pedigree: Record<string, unknown>; riskFactors: Record<string, unknown>; taus: number[] } | { error: string } {
  const pedigree = structuredClone(base.pedigree);
  const riskFactors = structuredClone(base.riskFactors);
  let taus = [...base.taus];
  const mem = Array.isArray(pedigree["members"])
    ? (pedigree["members"] as Record<string, unknown>[])
    : [];

  switch (delta.op) {
    case "set_risk_factor": {
      const field = delta["field"];
      if (typeof field !== "string") return { error: "set_risk_factor needs a 'field' name" };
      const value = delta["value"] ?? null;
      if (value === null) delete riskFactors[field];
      else riskFactors[field] = value;
      return { pedigree, riskFactors, taus };
    }
    case "add_relative": {
      const member = delta["member"];
      if (typeof member !== "object" || member === null || Array.isArray(member)) {
        return { error: "add_relative needs a 'member' object" };
      }
      const copy = { ...(member as Record<string, unknown>) };
      if (!("id" in copy)) {
        const ids = mem
          .map((m) => m["id"])
          .filter((v): v is number => typeof v === "number" && Number.isInteger(v));
        copy["id"] = ids.length === 0 ? 0 : Math.max(...ids) + 1;
      }
      mem.push(copy);
      pedigree["members"] = mem;
      return { pedigree, riskFactors, taus };
    }
    case "remove_relative": {
      const target = delta["id"];
      const kept = mem.filter((m) => m["id"] !== target);
      if (kept.length === mem.length) return { error: `no member with id ${pyRepr(target)}` };
      pedigree["members"] = kept;
      return { pedigree, riskFactors, taus };
    }
    case "set_member": {
      const target = delta["id"];
      const field = delta["field"];
      if (typeof field !== "string") return { error: "set_member needs a 'field' name" };
      const value = delta["value"] ?? null;
      for (const m of mem) {
        if (m["id"] === target) {
          if (value === null) delete m[field];
          else m[field] = value;
          return { pedigree, riskFactors, taus };
        }
      }
      return { error: `no member with id ${pyRepr(target)}` };
    }
    case "set_tau": {
      const t = delta["tau"];
      taus = Array.isArray(t) ? (t as number[]) : typeof t === "number" ? [t] : taus;
      return { pedigree, riskFactors, taus };
    }
    default:
      return { error: `unknown delta op ${pyRepr(delta.op)}` };
  }
}

export function promoteDelta(state: SessionState, delta: WhatIfDelta): SessionState {
  const applied = applyDelta(
    { pedigree: state.pedigree, riskFactors: state.riskFactors, taus: state.taus },
    delta,
  );
  if ("error" in applied) return state;
  return {
    ...state,
    pedigree: applied.pedigree,
    riskFactors: applied.riskFactors,
    taus: applied.taus,
  };
}
