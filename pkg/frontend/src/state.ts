// Editor state: a ScenarioDocument under construction, dirty tracking, and
// a response cache keyed by the server-echoed scenario hash. All edits go
// through these functions so panels can re-render from one source of truth.

import { ScenarioDocument, StratumDoc, VaccineDoc } from "./types.js";

export interface UiScenarioState {
  doc: ScenarioDocument;
  dirty: boolean; // edited since the last response arrived
  cache: Map<string, unknown>; // "<hash>:<panel-key>" -> response body
}

export function defaultScenario(): ScenarioDocument {
  return {
    schema_version: 1,
    variants: [
      { id: 1, rate: 0.1 },
      { id: 2, rate: 0.05 },
    ],
    vaccines: [{ id: "m", mode: "leaky", thetas: { "1": 0.4, "2": 0.8 } }],
    horizon: 2.0,
    coverage: { placebo: 0.5, m: 0.5 },
    design: {
      design: "cohort_crr",
      n: 2000,
      alpha: 0.05,
      power: 0.8,
      confounder_rho: 0.0,
    },
  };
}

export function newState(doc: ScenarioDocument = defaultScenario()): UiScenarioState {
  return { doc, dirty: true, cache: new Map() };
}

function touch(state: UiScenarioState): void {
  state.dirty = true;
}

// -- variants ---------------------------------------------------------------

export function addVariant(state: UiScenarioState, rate = 0.05): void {
  const id = state.doc.variants.length + 1;
  state.doc.variants.push({ id, rate });
  for (const vac of state.doc.vaccines) {
    if (vac.mode === "leaky" && vac.thetas) vac.thetas[String(id)] = 1.0;
  }
  if (state.doc.tnd) state.doc.tnd.p_symptom_case[String(id)] = 0.5;
  touch(state);
}

export function removeVariant(state: UiScenarioState): void {
  const doc = state.doc;
  if (doc.variants.length <= 1) return;
  const id = doc.variants.length;
  doc.variants.pop();
  for (const vac of doc.vaccines) {
    if (vac.thetas) delete vac.thetas[String(id)];
    if (vac.strata) {
      vac.strata = vac.strata.filter((st) => !st.variants.includes(id));
    }
  }
  if (doc.tnd) delete doc.tnd.p_symptom_case[String(id)];
  touch(state);
}

export function setRate(state: UiScenarioState, id: number, rate: number): void {
  const variant = state.doc.variants.find((v) => v.id === id);
  if (variant) {
    variant.rate = rate;
    touch(state);
  }
}

// -- vaccines ---------------------------------------------------------------

function freshVaccineId(doc: ScenarioDocument): string {
  const used = new Set(doc.vaccines.map((v) => v.id));
  for (let k = 0; ; k++) {
    const candidate = String.fromCharCode(109 + k); // m, n, o, ...
    if (!used.has(candidate)) return candidate;
  }
}

export function addVaccine(state: UiScenarioState): string {
  const id = freshVaccineId(state.doc);
  const thetas: Record<string, number> = {};
  for (const v of state.doc.variants) thetas[String(v.id)] = 0.5;
  state.doc.vaccines.push({ id, mode: "leaky", thetas });
  rebalanceCoverage(state);
  if (state.doc.tnd) state.doc.tnd.p_seek_care[id] = 0.5;
  touch(state);
  return id;
}

export function removeVaccine(state: UiScenarioState, id: string): void {
  const doc = state.doc;
  if (doc.vaccines.length <= 1) return;
  doc.vaccines = doc.vaccines.filter((v) => v.id !== id);
  delete doc.coverage[id];
  if (doc.tnd) delete doc.tnd.p_seek_care[id];
  rebalanceCoverage(state);
  touch(state);
}

export function setMode(
  state: UiScenarioState,
  id: string,
  mode: VaccineDoc["mode"],
): void {
  const vac = state.doc.vaccines.find((v) => v.id === id);
  if (!vac || vac.mode === mode) return;
  vac.mode = mode;
  if (mode === "leaky") {
    delete vac.strata;
    delete vac.fill_remainder;
    vac.thetas = {};
    for (const v of state.doc.variants) vac.thetas[String(v.id)] = 0.5;
  } else {
    delete vac.thetas;
    vac.strata = state.doc.variants.map((v) => ({
      variants: [v.id],
      proportion: 0.1,
    }));
    vac.fill_remainder = true;
  }
  touch(state);
}

export function setTheta(
  state: UiScenarioState,
  id: string,
  variant: number,
  theta: number,
): void {
  const vac = state.doc.vaccines.find((v) => v.id === id);
  if (vac?.thetas) {
    vac.thetas[String(variant)] = theta;
    touch(state);
  }
}

export function setStrata(state: UiScenarioState, id: string, strata: StratumDoc[]): void {
  const vac = state.doc.vaccines.find((v) => v.id === id);
  if (vac && vac.mode === "all_or_none") {
    vac.strata = strata;
    touch(state);
  }
}

// equal shares for placebo and every vaccine; keeps the form valid by default
export function rebalanceCoverage(state: UiScenarioState): void {
  const arms = ["placebo", ...state.doc.vaccines.map((v) => v.id)];
  const share = 1 / arms.length;
  state.doc.coverage = Object.fromEntries(arms.map((a) => [a, share]));
  touch(state);
}

export function setCoverage(state: UiScenarioState, arm: string, share: number): void {
  state.doc.coverage[arm] = share;
  touch(state);
}

export function setHorizon(state: UiScenarioState, t: number): void {
  state.doc.horizon = t;
  touch(state);
}

export function setDesignField(
  state: UiScenarioState,
  field: "n" | "x" | "r" | "alpha" | "power" | "confounder_rho",
  value: number,
): void {
  if (state.doc.design) {
    state.doc.design[field] = value;
    touch(state);
  }
}

// -- import/export and caching ----------------------------------------------

export function exportDocument(state: UiScenarioState): string {
  return JSON.stringify(state.doc, null, 2) + "\n";
}

export function importDocument(state: UiScenarioState, text: string): void {
  state.doc = JSON.parse(text) as ScenarioDocument;
  state.cache.clear();
  touch(state);
}

// stable serialization of the current scenario, used to detect staleness:
// a response is dropped when the scenario changed while it was in flight
export function scenarioKey(doc: ScenarioDocument): string {
  const sorted = (value: unknown): unknown => {
    if (Array.isArray(value)) return value.map(sorted);
    if (value && typeof value === "object") {
      return Object.fromEntries(
        Object.keys(value as Record<string, unknown>)
          .sort()
          .map((k) => [k, sorted((value as Record<string, unknown>)[k])]),
      );
    }
    return value;
  };
  return JSON.stringify(sorted(doc));
}

export function cachePut(
  state: UiScenarioState,
  scenarioHash: string,
  panelKey: string,
  body: unknown,
): void {
  state.cache.set(`${scenarioHash}:${panelKey}`, body);
  state.dirty = false;
}

export function cacheGet(
  state: UiScenarioState,
  scenarioHash: string,
  panelKey: string,
): unknown {
  return state.cache.get(`${scenarioHash}:${panelKey}`);
}
