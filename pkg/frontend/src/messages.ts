/** Diagnostic message catalog, kept character-identical to the one the
 * service ships (riskfusion/contract/validation-messages.json, version 1).
 * tests/messages.test.ts fails if the two ever drift. */

export const CATALOG_VERSION = 1;

export const MESSAGES = {
  document_not_object: "document must be a JSON object",
  members_not_array: "members must be an array",
  members_empty: "pedigree must contain at least one member",
  schema_version_unsupported: "schema_version {version} is not supported",
  field_missing: "required field {field} is missing",
  id_not_integer: "id must be an integer",
  id_duplicate: "duplicate member id {id}",
  proband_first: "member 0 must be the proband",
  proband_count: "exactly one proband is required; found {count}",
  proband_dead: "the proband must be alive",
  relation_invalid: "relation must be one of {allowed}",
  relation_duplicate: "relation {relation} may appear at most once",
  sex_invalid: "sex must be one of {allowed}",
  sex_relation_mismatch: "relation {relation} requires sex {expected}",
  alive_not_boolean: "alive must be a boolean",
  age_not_integer: "current_age_or_death_age must be an integer",
  age_below_min: "current_age_or_death_age must be at least 1",
  age_clamped: "current_age_or_death_age {age} exceeds table support; clamped to 94",
  onset_not_integer: "{cancer} onset age must be an integer or null",
  onset_below_min: "{cancer} onset age must be at least 1",
  onset_after_age: "{cancer} onset age {onset} exceeds current_age_or_death_age {age}",
  onset_after_surgery: "{cancer} onset age {onset} exceeds {surgery} {surgery_age}",
  ovarian_male: "ovarian_cancer must be absent for males",
  oophorectomy_male: "prophylactic_oophorectomy_age must be absent for males",
  test_invalid: "genetic_test must be one of {allowed}",
  surgery_not_integer: "{surgery} must be an integer or null",
  surgery_below_min: "{surgery} must be at least 1",
  surgery_after_age: "{surgery} {surgery_age} exceeds current_age_or_death_age {age}",
  ethnicity_invalid: "ethnicity_flags.ashkenazi must be a boolean",
  race_invalid: "race must be one of {allowed}",
  rf_not_object: "risk factor document must be a JSON object",
  rf_menarche_invalid: "age_at_menarche must be an integer in [1, 94] or null",
  rf_biopsies_invalid: "num_biopsies must be 0, 1, 2, or null",
  rf_afb_invalid: "age_first_live_birth must be an integer in [1, 94]",
  rf_x4_invalid: "affected_first_degree must be a non-negative integer",
  rf_hyperplasia_invalid: "atypical_hyperplasia must be 0, 1, or null",
  rf_x4_mismatch: "affected_first_degree {value} does not match the pedigree count {count}",
} as const;

export type MessageKey = keyof typeof MESSAGES;

/* The server fills templates with Python's str(), so null and booleans
 * render as "None"/"True"/"False" if they ever reach a placeholder. */
function asServerString(value: unknown): string {
  if (value === null || value === undefined) return "None";
  if (value === true) return "True";
  if (value === false) return "False";
  return String(value);
}

export function renderMessage(key: MessageKey, params: Record<string, unknown> = {}): string {
  let out: string = MESSAGES[key];
  for (const [name, value] of Object.entries(params)) {
    out = out.split("{" + name + "}").join(asServerString(value));
  }
  return out;
}
