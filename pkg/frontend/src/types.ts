/** Documents and payloads exchanged with the scoring service. */

export type Sex = "female" | "male";

export type Relation =
  | "proband"
  | "mother"
  | "father"
  | "sister"
  | "brother"
  | "daughter"
  | "son"
  | "maternal_grandmother"
  | "maternal_grandfather"
  | "paternal_grandmother"
  | "paternal_grandfather"
  | "maternal_aunt"
  | "maternal_uncle"
  | "paternal_aunt"
  | "paternal_uncle";

export interface MemberDocument {
  id: number;
  relation: Relation;
  sex: Sex;
  current_age_or_death_age: number;
  alive: boolean;
  breast_cancer?: number | null;
  ovarian_cancer?: number | null;
  genetic_test?: string | null;
  prophylactic_mastectomy_age?: number | null;
  prophylactic_oophorectomy_age?: number | null;
  ethnicity_flags?: { ashkenazi?: boolean };
  race?: string;
}

export interface PedigreeDocument {
  schema_version?: number;
  members: MemberDocument[];
}

export interface RiskFactorDocument {
  age_at_menarche?: number | null;
  num_biopsies?: number | null;
  age_first_live_birth?: number;
  affected_first_degree?: number;
  atypical_hyperplasia?: number | null;
}

/** One field-level problem, same shape the service returns under 400. */
export interface Diagnostic {
  field: string;
  message: string;
  member_id: number | null;
}

/** What the renderers need to know about a member; the validator's
 * ParsedMember satisfies this structurally. */
export interface ParsedMemberLike {
  id: number;
  relation: string;
  sex: Sex;
  current_age_or_death_age: number;
  alive: boolean;
  breast_cancer: number | null;
  ovarian_cancer: number | null;
  genetic_test: string | null;
}

export interface ScoreRequest {
  pedigree: unknown;
  risk_factors?: unknown;
  tau?: number | number[];
  a?: number;
  models?: string[];
  use_family_history?: boolean;
}

/** Risk strings are decimal strings, never numbers; keep them verbatim. */
export interface ModelResult {
  eligible: boolean;
  risks?: Record<string, string>;
  reason?: string;
  status?: number;
}

export interface ScoreResponse {
  schema_version: number;
  tau: number[];
  models: Record<string, ModelResult>;
  carrier_probabilities: Record<string, string>;
  error?: string;
}

export interface WhatIfDelta {
  op: "set_risk_factor" | "add_relative" | "remove_relative" | "set_member" | "set_tau";
  [key: string]: unknown;
}

export interface WhatIfRequest {
  base: ScoreRequest;
  deltas: WhatIfDelta[];
}

export interface WhatIfRow {
  delta: WhatIfDelta;
  result?: ScoreResponse;
  difference?: Record<string, Record<string, string>>;
  error?: { message?: string; diagnostics?: Diagnostic[] };
}

export interface WhatIfResponse {
  schema_version: number;
  baseline: ScoreResponse;
  rows: WhatIfRow[];
}

export interface ModelInfo {
  name: string;
  kind: string;
  description: string;
  tau_range?: number[];
  transform?: string;
}

export interface ModelsResponse {
  schema_version: number;
  models: ModelInfo[];
}

export interface ApiReply<T> {
  status: number;
  body: T;
}
