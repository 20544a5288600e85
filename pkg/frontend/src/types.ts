// Wire types mirroring the service's scenario schema.

export interface VariantDoc {
  id: number;
  rate: number;
}

export interface StratumDoc {
  variants: number[]; // empty = the unprotected share
  proportion: number;
}

export interface VaccineDoc {
  id: string;
  mode: "leaky" | "all_or_none";
  thetas?: Record<string, number>;
  strata?: StratumDoc[];
  fill_remainder?: boolean;
}

export interface TndDoc {
  population: number;
  rate_offtarget: number;
  p_symptom_case: Record<string, number>;
  p_symptom_offtarget: number;
  p_seek_care: Record<string, number>;
  sampling: "inclusive" | "density";
}

export type DesignName =
  | "cohort_crr"
  | "cohort_irr"
  | "case_control_or"
  | "tnd_inclusive_or";

export interface DesignDoc {
  design: DesignName;
  n?: number;
  x?: number;
  r?: number;
  alpha: number;
  power: number;
  confounder_rho: number;
}

export interface ScenarioDocument {
  schema_version: 1;
  variants: VariantDoc[];
  vaccines: VaccineDoc[];
  horizon: number;
  coverage: Record<string, number>;
  tnd?: TndDoc;
  design?: DesignDoc;
}

export type MeasureKind = "irr" | "crr" | "or";

export interface ComparisonDoc {
  type: "variant_specific" | "relative_variants" | "relative_vaccines";
  variant: number;
  vaccine: string;
  variant_other?: number;
  vaccine_ref?: string;
}

export type VeWire = number | { divergent: "-inf" };

export interface PointResponse {
  schema_version: number;
  scenario_hash: string;
  measure: MeasureKind;
  t: number;
  ve: VeWire;
}

export interface CurveResponse {
  schema_version: number;
  scenario_hash: string;
  measure: MeasureKind;
  times: number[];
  values: number[];
  time_invariant: boolean;
  spread: number;
}

export interface LimitsResponse {
  schema_version: number;
  scenario_hash: string;
  limits: {
    small: Record<MeasureKind, VeWire | null>;
    large: Record<MeasureKind, VeWire | null>;
  };
}

export interface MdveResponse {
  schema_version: number;
  scenario_hash: string;
  design: DesignName;
  alpha: number;
  target_power: number;
  mdve: number;
  kind: MeasureKind;
  achieved_power: number;
  power_curve: { ve: number; power: number }[];
}

export interface PrecisionResponse {
  schema_version: number;
  scenario_hash: string;
  design: DesignName;
  n_sim: number;
  seed: number;
  estimate_mean: number;
  expected_ci: [number, number];
  sd_of_estimates: number;
  n_degenerate: number;
}

export interface TndResponse {
  schema_version: number;
  scenario_hash: string;
  t: number;
  sampling: "inclusive" | "density";
  expected_cases: Record<string, number[]>;
  expected_controls: Record<string, number>;
  tnd_ve: Record<string, Record<string, number>>;
}

export interface ServiceErrorBody {
  error: string;
  message?: string;
  detail?: { path: string[]; message: string }[];
  max_power?: number;
}
