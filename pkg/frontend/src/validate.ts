/** Client-side pedigree and risk-factor validation.
 *
 * This is a faithful port of the server's validator: same checks, same
 * order, same message wording (via the shared catalog in messages.ts).
 * The shared corpus under docs/contract-corpus pins both sides to byte
 * identical diagnostics, so anything the form accepts the service will
 * accept, and every inline error matches what a 400 would have said.
 */

import { MessageKey, renderMessage } from "./messages.js";
import type { Diagnostic, MemberDocument, PedigreeDocument, RiskFactorDocument, Sex } from "./types.js";

export const MAX_AGE = 94;

export const RELATIONS = [
  "proband",
  "mother",
  "father",
  "sister",
  "brother",
  "daughter",
  "son",
  "maternal_grandmother",
  "maternal_grandfather",
  "paternal_grandmother",
  "paternal_grandfather",
  "maternal_aunt",
  "maternal_uncle",
  "paternal_aunt",
  "paternal_uncle",
] as const;

const SINGULAR_RELATIONS = new Set([
  "proband",
  "mother",
  "father",
  "maternal_grandmother",
  "maternal_grandfather",
  "paternal_grandmother",
  "paternal_grandfather",
]);

export const SEX_FOR_RELATION: Record<string, Sex> = {
  proband: "female",
  mother: "female",
  sister: "female",
  daughter: "female",
  maternal_grandmother: "female",
  paternal_grandmother: "female",
  maternal_aunt: "female",
  paternal_aunt: "female",
  father: "male",
  brother: "male",
  son: "male",
  maternal_grandfather: "male",
  paternal_grandfather: "male",
  maternal_uncle: "male",
  paternal_uncle: "male",
};

const FIRST_DEGREE_FEMALE = new Set(["mother", "sister", "daughter"]);

export const GENETIC_TESTS = ["BRCA1+", "BRCA2+", "both+", "negative"] as const;

export const RACES = ["white", "black", "hispanic", "asian", "native_american", "unknown"] as const;

export const SCHEMA_VERSION = 1;

export interface ParsedMember {
  id: number;
  relation: string;
  sex: Sex;
  current_age_or_death_age: number;
  alive: boolean;
  breast_cancer: number | null;
  ovarian_cancer: number | null;
  genetic_test: string | null;
  prophylactic_mastectomy_age: number | null;
  prophylactic_oophorectomy_age: number | null;
  ethnicity_flags: { ashkenazi: boolean };
  race: string;
}

export interface ParsedPedigree {
  members: ParsedMember[];
  warnings: Diagnostic[];
}

export type ValidationResult<T> =
  | { ok: true; value: T; warnings: Diagnostic[] }
  | { ok: false; errors: Diagnostic[] };

class Diagnostics {
  errors: Diagnostic[] = [];
  warnings: Diagnostic[] = [];

  error(field: string, key: MessageKey, memberId: number | null = null, params: Record<string, unknown> = {}): void {
    this.errors.push({ field, message: renderMessage(key, params), member_id: memberId });
  }

  warn(field: string, key: MessageKey, memberId: number | null = null, params: Record<string, unknown> = {}): void {
    this.warnings.push({ field, message: renderMessage(key, params), member_id: memberId });
  }
}

function isPlainObject(v: unknown): v is Record<string, unknown> {
  return typeof v === "object" && v !== null && !Array.isArray(v);
}

/* JSON integers only; booleans are a distinct type here, matching the
 * server's explicit bool exclusion. */
function isInt(v: unknown): v is number {
  return typeof v === "number" && Number.isInteger(v);
}

function get(raw: Record<string, unknown>, name: string): unknown {
  const v = raw[name];
  return v === undefined ? null : v;
}

function checkOptionalAge(
  value: unknown,
  memberId: number | null,
  fieldName: string,
  notIntKey: MessageKey,
  belowMinKey: MessageKey,
  diags: Diagnostics,
  params: Record<string, unknown>,
): number | null {
  if (value === null) return null;
  if (!isInt(value)) {
    diags.error(fieldName, notIntKey, memberId, params);
    return null;
  }
  if (value < 1) {
    diags.error(fieldName, belowMinKey, memberId, params);
    return null;
  }
  return value;
}

function parseMember(raw: unknown, index: number, diags: Diagnostics): ParsedMember | null {
  if (!isPlainObject(raw)) {
    diags.error(`members[${index}]`, "document_not_object");
    return null;
  }

  let memberId: number | null = null;
  const rawId = get(raw, "id");
  if (!isInt(rawId)) {
    diags.error(`members[${index}].id`, "id_not_integer");
  } else {
    memberId = rawId;
  }

  for (const name of ["relation", "sex", "current_age_or_death_age", "alive"]) {
    if (!(name in raw)) diags.error(name, "field_missing", memberId, { field: name });
  }

  let relation = get(raw, "relation");
  if (relation !== null && !(RELATIONS as readonly unknown[]).includes(relation)) {
    diags.error("relation", "relation_invalid", memberId, { allowed: RELATIONS.join(", ") });
    relation = null;
  }

  let sex = get(raw, "sex");
  if (sex !== null && sex !== "female" && sex !== "male") {
    diags.error("sex", "sex_invalid", memberId, { allowed: "female, male" });
    sex = null;
  }
  if (relation !== null && sex !== null && SEX_FOR_RELATION[relation as string] !== sex) {
    diags.error("sex", "sex_relation_mismatch", memberId, {
      relation,
      expected: SEX_FOR_RELATION[relation as string],
    });
  }

  let alive = get(raw, "alive");
  if (alive !== null && typeof alive !== "boolean") {
    diags.error("alive", "alive_not_boolean", memberId);
    alive = null;
  }

  let age: number | null = null;
  const rawAge = get(raw, "current_age_or_death_age");
  if (rawAge !== null) {
    if (!isInt(rawAge)) {
      diags.error("current_age_or_death_age", "age_not_integer", memberId);
    } else if (rawAge < 1) {
      diags.error("current_age_or_death_age", "age_below_min", memberId);
    } else if (rawAge > MAX_AGE) {
      diags.warn("current_age_or_death_age", "age_clamped", memberId, { age: rawAge });
      age = MAX_AGE;
    } else {
      age = rawAge;
    }
  }

  const breast = checkOptionalAge(
    get(raw, "breast_cancer"), memberId, "breast_cancer",
    "onset_not_integer", "onset_below_min", diags, { cancer: "breast_cancer" },
  );
  let ovarian = checkOptionalAge(
    get(raw, "ovarian_cancer"), memberId, "ovarian_cancer",
    "onset_not_integer", "onset_below_min", diags, { cancer: "ovarian_cancer" },
  );
  const mastectomy = checkOptionalAge(
    get(raw, "prophylactic_mastectomy_age"), memberId, "prophylactic_mastectomy_age",
    "surgery_not_integer", "surgery_below_min", diags, { surgery: "prophylactic_mastectomy_age" },
  );
  let oophorectomy = checkOptionalAge(
    get(raw, "prophylactic_oophorectomy_age"), memberId, "prophylactic_oophorectomy_age",
    "surgery_not_integer", "surgery_below_min", diags, { surgery: "prophylactic_oophorectomy_age" },
  );

  /* Sex restrictions look at the raw fields, so a malformed value on a
   * male still reports both the type error and the sex error. */
  if (sex === "male") {
    if (get(raw, "ovarian_cancer") !== null) {
      diags.error("ovarian_cancer", "ovarian_male", memberId);
      ovarian = null;
    }
    if (get(raw, "prophylactic_oophorectomy_age") !== null) {
      diags.error("prophylactic_oophorectomy_age", "oophorectomy_male", memberId);
      oophorectomy = null;
    }
  }

  if (age !== null) {
    for (const [cancerName, onset] of [
      ["breast_cancer", breast],
      ["ovarian_cancer", ovarian],
    ] as const) {
      if (onset !== null && onset > age) {
        diags.error(cancerName, "onset_after_age", memberId, { cancer: cancerName, onset, age });
      }
    }
    for (const [surgeryName, sAge] of [
      ["prophylactic_mastectomy_age", mastectomy],
      ["prophylactic_oophorectomy_age", oophorectomy],
    ] as const) {
      if (sAge !== null && sAge > age) {
        diags.error(surgeryName, "surgery_after_age", memberId, {
          surgery: surgeryName, surgery_age: sAge, age,
        });
      }
    }
  }
  if (breast !== null && mastectomy !== null && breast > mastectomy) {
    diags.error("breast_cancer", "onset_after_surgery", memberId, {
      cancer: "breast_cancer", onset: breast,
      surgery: "prophylactic_mastectomy_age", surgery_age: mastectomy,
    });
  }
  if (ovarian !== null && oophorectomy !== null && ovarian > oophorectomy) {
    diags.error("ovarian_cancer", "onset_after_surgery", memberId, {
      cancer: "ovarian_cancer", onset: ovarian,
      surgery: "prophylactic_oophorectomy_age", surgery_age: oophorectomy,
    });
  }

  let test = get(raw, "genetic_test");
  if (test !== null && !(GENETIC_TESTS as readonly unknown[]).includes(test)) {
    diags.error("genetic_test", "test_invalid", memberId, { allowed: GENETIC_TESTS.join(", ") });
    test = null;
  }

  let ethnicity: unknown = "ethnicity_flags" in raw ? raw["ethnicity_flags"] : { ashkenazi: false };
  if (
    !isPlainObject(ethnicity) ||
    typeof ("ashkenazi" in ethnicity ? ethnicity["ashkenazi"] : false) !== "boolean"
  ) {
    diags.error("ethnicity_flags", "ethnicity_invalid", memberId);
    ethnicity = { ashkenazi: false };
  }

  let race: unknown = "race" in raw ? raw["race"] : "unknown";
  if (!(RACES as readonly unknown[]).includes(race)) {
    diags.error("race", "race_invalid", memberId, { allowed: RACES.join(", ") });
    race = "unknown";
  }

  if (memberId === null || relation === null || sex === null || age === null || alive === null) {
    return null;
  }
  const flags = ethnicity as Record<string, unknown>;
  return {
    id: memberId,
    relation: relation as string,
    sex: sex as Sex,
    current_age_or_death_age: age,
    alive: alive as boolean,
    breast_cancer: breast,
    ovarian_cancer: ovarian,
    genetic_test: test as string | null,
    prophylactic_mastectomy_age: mastectomy,
    prophylactic_oophorectomy_age: oophorectomy,
    ethnicity_flags: { ashkenazi: Boolean("ashkenazi" in flags ? flags["ashkenazi"] : false) },
    race: race as string,
  };
}

export function parsePedigree(document: unknown): ValidationResult<ParsedPedigree> {
  const diags = new Diagnostics();
  if (!isPlainObject(document)) {
    diags.error("$", "document_not_object");
    return { ok: false, errors: diags.errors };
  }

  const version = "schema_version" in document ? document["schema_version"] : SCHEMA_VERSION;
  // the server compares with ==, under which true equals 1
  if (version !== SCHEMA_VERSION && version !== true) {
    diags.error("schema_version", "schema_version_unsupported", null, { version });
  }

  const rawMembers = document["members"];
  if (!Array.isArray(rawMembers)) {
    diags.error("members", "members_not_array");
    return { ok: false, errors: diags.errors };
  }
  if (rawMembers.length === 0) {
    diags.error("members", "members_empty");
    return { ok: false, errors: diags.errors };
  }

  const members: ParsedMember[] = [];
  for (let i = 0; i < rawMembers.length; i++) {
    const m = parseMember(rawMembers[i], i, diags);
    if (m !== null) members.push(m);
  }

  // Structural checks only make sense once every member parsed cleanly.
  if (members.length === rawMembers.length) {
    const seen = new Set<number>();
    for (const m of members) {
      if (seen.has(m.id)) diags.error("id", "id_duplicate", m.id, { id: m.id });
      seen.add(m.id);
    }

    const probands = members.filter((m) => m.relation === "proband");
    if (probands.length !== 1) {
      diags.error("members", "proband_count", null, { count: probands.length });
    } else if (members[0]!.relation !== "proband") {
      diags.error("members", "proband_first");
    } else if (!members[0]!.alive) {
      diags.error("alive", "proband_dead", members[0]!.id);
    }

    const counts = new Map<string, number>();
    for (const m of members) counts.set(m.relation, (counts.get(m.relation) ?? 0) + 1);
    for (const [relation, n] of counts) {
      if (SINGULAR_RELATIONS.has(relation) && n > 1 && relation !== "proband") {
        diags.error("relation", "relation_duplicate", null, { relation });
      }
    }
  }

  if (diags.errors.length > 0) return { ok: false, errors: diags.errors };
  return { ok: true, value: { members, warnings: diags.warnings }, warnings: diags.warnings };
}

export interface ParsedRiskFactors {
  age_at_menarche: number | null;
  num_biopsies: number | null;
  age_first_live_birth: number;
  affected_first_degree: number;
  atypical_hyperplasia: number | null;
}

export function countAffectedFirstDegree(p: ParsedPedigree): number {
  let n = 0;
  for (const m of p.members) {
    if (FIRST_DEGREE_FEMALE.has(m.relation) && m.sex === "female" && m.breast_cancer !== null) n++;
  }
  return n;
}

export function parseRiskFactors(
  document: unknown,
  pedigree: ParsedPedigree | null = null,
): ValidationResult<ParsedRiskFactors> {
  const diags = new Diagnostics();
  if (!isPlainObject(document)) {
    diags.error("$", "rf_not_object");
    return { ok: false, errors: diags.errors };
  }

  const optInt = (name: string, key: MessageKey, low: number, high: number): number | null => {
    const v = get(document, name);
    if (v === null) return null;
    if (!isInt(v) || v < low || v > high) {
      diags.error(name, key);
      return null;
    }
    return v;
  };

  const menarche = optInt("age_at_menarche", "rf_menarche_invalid", 1, MAX_AGE);
  const biopsies = optInt("num_biopsies", "rf_biopsies_invalid", 0, 2);
  const hyperplasia = optInt("atypical_hyperplasia", "rf_hyperplasia_invalid", 0, 1);

  let afb = "age_first_live_birth" in document ? document["age_first_live_birth"] : 25;
  if (!isInt(afb) || afb < 1 || afb > MAX_AGE) {
    diags.error("age_first_live_birth", "rf_afb_invalid");
    afb = 25;
  }

  let x4: number;
  if ("affected_first_degree" in document) {
    const rawX4 = document["affected_first_degree"];
    if (!isInt(rawX4) || rawX4 < 0) {
      diags.error("affected_first_degree", "rf_x4_invalid");
      x4 = 0;
    } else {
      x4 = rawX4;
      if (pedigree !== null) {
        const expected = countAffectedFirstDegree(pedigree);
        if (x4 !== expected) {
          diags.error("affected_first_degree", "rf_x4_mismatch", null, { value: x4, count: expected });
        }
      }
    }
  } else {
    x4 = pedigree !== null ? countAffectedFirstDegree(pedigree) : 0;
  }

  if (diags.errors.length > 0) return { ok: false, errors: diags.errors };
  return {
    ok: true,
    value: {
      age_at_menarche: menarche,
      num_biopsies: biopsies,
      age_first_live_birth: afb as number,
      affected_first_degree: x4,
      atypical_hyperplasia: hyperplasia,
    },
    warnings: diags.warnings,
  };
}

/** Canonical JSON form of a parsed member, as the server re-serializes it. */
export function memberToDocument(m: ParsedMember): MemberDocument {
  return {
    id: m.id,
    relation: m.relation as MemberDocument["relation"],
    sex: m.sex,
    current_age_or_death_age: m.current_age_or_death_age,
    alive: m.alive,
    breast_cancer: m.breast_cancer,
    ovarian_cancer: m.ovarian_cancer,
    genetic_test: m.genetic_test,
    prophylactic_mastectomy_age: m.prophylactic_mastectomy_age,
    prophylactic_oophorectomy_age: m.prophylactic_oophorectomy_age,
    ethnicity_flags: { ashkenazi: m.ethnicity_flags.ashkenazi },
    race: m.race,
  };
}

export function pedigreeToDocument(p: ParsedPedigree): PedigreeDocument {
  return {
    schema_version: SCHEMA_VERSION,
    members: p.members.map(memberToDocument),
  };
}

export function riskFactorsToDocument(rf: ParsedRiskFactors): RiskFactorDocument {
  return {
    age_at_menarche: rf.age_at_menarche,
    num_biopsies: rf.num_biopsies,
    age_first_live_birth: rf.age_first_live_birth,
    affected_first_degree: rf.affected_first_degree,
    atypical_hyperplasia: rf.atypical_hyperplasia,
  };
}
