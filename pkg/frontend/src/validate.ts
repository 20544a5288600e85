// Client-side checks mirroring the service schema, so most mistakes are
// flagged at the field before a request is ever sent. The server stays
// authoritative; these only gate/annotate the form.

import { ScenarioDocument, VaccineDoc } from "./types.js";

export interface FieldIssue {
  field: string; // dotted path used to attach the message to an input
  message: string;
}

export const SUM_TOL = 1e-9; // form inputs are low-precision; looser than server

function near(value: number, target: number): boolean {
  return Math.abs(value - target) <= SUM_TOL;
}

export function coverageSum(doc: ScenarioDocument): number {
  return Object.values(doc.coverage).reduce((s, v) => s + v, 0);
}

export function strataSum(vaccine: VaccineDoc): number {
  return (vaccine.strata ?? []).reduce((s, st) => s + st.proportion, 0);
}

export function validateScenario(doc: ScenarioDocument): FieldIssue[] {
  const issues: FieldIssue[] = [];
  if (doc.variants.length === 0) {
    issues.push({ field: "variants", message: "add at least one variant" });
  }
  const ids = doc.variants.map((v) => v.id).sort((a, b) => a - b);
  ids.forEach((id, k) => {
    if (id !== k + 1) {
      issues.push({ field: "variants", message: "variant ids must be 1..I" });
    }
  });
  doc.variants.forEach((v) => {
    if (!(v.rate > 0) || !Number.isFinite(v.rate)) {
      issues.push({ field: `variants.${v.id}.rate`, message: "rate must be > 0" });
    }
  });
  if (!(doc.horizon > 0) || !Number.isFinite(doc.horizon)) {
    issues.push({ field: "horizon", message: "horizon must be > 0" });
  }

  const seen = new Set<string>();
  doc.vaccines.forEach((vac) => {
    if (vac.id === "placebo" || vac.id === "") {
      issues.push({ field: `vaccines.${vac.id}.id`, message: "invalid vaccine id" });
    }
    if (seen.has(vac.id)) {
      issues.push({ field: `vaccines.${vac.id}.id`, message: "duplicate vaccine id" });
    }
    seen.add(vac.id);
    if (vac.mode === "leaky") {
      for (const v of doc.variants) {
        const theta = vac.thetas?.[String(v.id)];
        if (theta === undefined || theta < 0 || theta > 1 || !Number.isFinite(theta)) {
          issues.push({
            field: `vaccines.${vac.id}.thetas.${v.id}`,
            message: "theta must lie in [0, 1]",
          });
        }
      }
    } else {
      const total = strataSum(vac);
      for (const st of vac.strata ?? []) {
        if (st.proportion < 0) {
          issues.push({
            field: `vaccines.${vac.id}.strata`,
            message: "proportions must be >= 0",
          });
        }
        if (st.variants.some((id) => !ids.includes(id))) {
          issues.push({
            field: `vaccines.${vac.id}.strata`,
            message: "stratum names an unknown variant",
          });
        }
      }
      if (vac.fill_remainder ? total > 1 + SUM_TOL : !near(total, 1)) {
        issues.push({
          field: `vaccines.${vac.id}.strata`,
          message: vac.fill_remainder
            ? `strata sum to ${total.toPrecision(6)} > 1`
            : `strata sum to ${total.toPrecision(6)}, need 1 (or fill remainder)`,
        });
      }
    }
  });

  const arms = new Set(["placebo", ...doc.vaccines.map((v) => v.id)]);
  const coverageKeys = new Set(Object.keys(doc.coverage));
  if (
    arms.size !== coverageKeys.size ||
    [...arms].some((a) => !coverageKeys.has(a))
  ) {
    issues.push({ field: "coverage", message: "coverage must cover every arm" });
  }
  if (Object.values(doc.coverage).some((v) => v < 0)) {
    issues.push({ field: "coverage", message: "coverage shares must be >= 0" });
  }
  if (!near(coverageSum(doc), 1)) {
    issues.push({
      field: "coverage",
      message: `coverage sums to ${coverageSum(doc).toPrecision(6)}, need 1`,
    });
  }

  if (doc.design) {
    const d = doc.design;
    if (!(d.alpha > 0 && d.alpha < 1)) {
      issues.push({ field: "design.alpha", message: "alpha must lie in (0, 1)" });
    }
    if (!(d.power > 0 && d.power < 1)) {
      issues.push({ field: "design.power", message: "power must lie in (0, 1)" });
    }
    if (!(d.confounder_rho >= 0 && d.confounder_rho < 1)) {
      issues.push({ field: "design.rho", message: "rho must lie in [0, 1)" });
    }
    const cohort = d.design === "cohort_crr" || d.design === "cohort_irr";
    if (cohort && (!d.n || d.n < 2)) {
      issues.push({ field: "design.n", message: "cohort designs need n >= 2" });
    }
    if (!cohort && (!d.x || d.x < 1 || !d.r || d.r <= 0)) {
      issues.push({ field: "design.x", message: "case designs need x >= 1 and r > 0" });
    }
  }
  return issues;
}
