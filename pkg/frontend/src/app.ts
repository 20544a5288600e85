// Calculator UI: scenario editor, VE(t) curve panel, and design panel, all
// computed server-side; the client renders returned numbers verbatim.

import { ApiClient, PanelChannel, ServiceError, linearGrid } from "./api.js";
import {
  ChartSeries,
  GuideLine,
  renderBand,
  renderChart,
} from "./chart.js";
import { debounce, formatVe, randomSeed, sig6 } from "./format.js";
import {
  UiScenarioState,
  addVaccine,
  addVariant,
  cachePut,
  exportDocument,
  importDocument,
  newState,
  rebalanceCoverage,
  removeVaccine,
  removeVariant,
  scenarioKey,
  setCoverage,
  setDesignField,
  setHorizon,
  setMode,
  setRate,
  setStrata,
  setTheta,
} from "./state.js";
import { ComparisonDoc, MeasureKind, StratumDoc } from "./types.js";
import { coverageSum, strataSum, validateScenario } from "./validate.js";

const MEASURES: MeasureKind[] = ["irr", "crr", "or"];
const COLORS: Record<MeasureKind, string> = { irr: "#2563eb", crr: "#dc2626", or: "#059669" };
const RECOMPUTE_DEBOUNCE_MS = 300;

const state: UiScenarioState = newState();
const client = new ApiClient("http://127.0.0.1:8000");
const curveChannel = new PanelChannel();
const designChannel = new PanelChannel();
const pointChannel = new PanelChannel();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function input(id: string): HTMLInputElement {
  return el<HTMLInputElement>(id);
}

function setText(id: string, text: string): void {
  el(id).textContent = text;
}

function numberInput(value: number, onChange: (v: number) => void, step = 0.01): HTMLInputElement {
  const node = document.createElement("input");
  node.type = "number";
  node.step = String(step);
  node.value = String(value);
  node.addEventListener("input", () => {
    const v = Number(node.value);
    if (Number.isFinite(v)) {
      onChange(v);
      onScenarioEdited();
    }
  });
  return node;
}

// -- error surfacing ---------------------------------------------------------

function clearErrors(): void {
  document.querySelectorAll(".field-error").forEach((n) => (n.textContent = ""));
  setText("editor-errors", "");
}

function showIssues(issues: { field: string; message: string }[]): void {
  clearErrors();
  const lines = issues.map((issue) => `${issue.field}: ${issue.message}`);
  setText("editor-errors", lines.join("\n"));
}

function showServiceError(panelId: string, err: unknown): void {
  const target = el(panelId);
  if (err instanceof ServiceError) {
    if (err.body.detail) {
      target.textContent = err.body.detail
        .map((d) => `${d.path.join(".")}: ${d.message}`)
        .join("\n");
    } else {
      target.textContent = `${err.body.error}: ${err.body.message ?? ""}`;
    }
  } else {
    target.textContent = String(err);
  }
}

// -- scenario editor ---------------------------------------------------------

function renderVariants(): void {
  const host = el("variants-body");
  host.innerHTML = "";
  for (const variant of state.doc.variants) {
    const row = document.createElement("tr");
    const name = document.createElement("td");
    name.textContent = `variant ${variant.id}`;
    const rate = document.createElement("td");
    rate.appendChild(
      numberInput(variant.rate, (v) => setRate(state, variant.id, v), 0.01),
    );
    row.append(name, rate);
    host.appendChild(row);
  }
}

function strataEditor(vaccineId: string, strata: StratumDoc[]): HTMLElement {
  const wrap = document.createElement("div");
  wrap.className = "strata";
  strata.forEach((stratum, idx) => {
    const row = document.createElement("div");
    row.className = "stratum-row";
    const label = document.createElement("span");
    label.textContent =
      stratum.variants.length === 0 ? "none (unprotected)" : `{${stratum.variants.join(",")}}`;
    row.appendChild(label);
    row.appendChild(
      numberInput(stratum.proportion, (v) => {
        const next = strata.map((s, k) => (k === idx ? { ...s, proportion: v } : s));
        setStrata(state, vaccineId, next);
        updateSums();
      }, 0.01),
    );
    wrap.appendChild(row);
  });
  return wrap;
}

function renderVaccines(): void {
  const host = el("vaccines-body");
  host.innerHTML = "";
  for (const vaccine of state.doc.vaccines) {
    const card = document.createElement("div");
    card.className = "vaccine-card";
    const head = document.createElement("div");
    head.className = "vaccine-head";
    const title = document.createElement("strong");
    title.textContent = `vaccine ${vaccine.id}`;
    const mode = document.createElement("select");
    for (const option of ["leaky", "all_or_none"]) {
      const opt = document.createElement("option");
      opt.value = option;
      opt.textContent = option;
      if (vaccine.mode === option) opt.selected = true;
      mode.appendChild(opt);
    }
    mode.addEventListener("change", () => {
      setMode(state, vaccine.id, mode.value as "leaky" | "all_or_none");
      renderEditor();
      onScenarioEdited();
    });
    const drop = document.createElement("button");
    drop.textContent = "remove";
    drop.addEventListener("click", () => {
      removeVaccine(state, vaccine.id);
      renderEditor();
      onScenarioEdited();
    });
    head.append(title, mode, drop);
    card.appendChild(head);

    if (vaccine.mode === "leaky" && vaccine.thetas) {
      const table = document.createElement("div");
      table.className = "theta-table";
      for (const variant of state.doc.variants) {
        const row = document.createElement("label");
        row.textContent = `theta ${variant.id} `;
        row.appendChild(
          numberInput(vaccine.thetas[String(variant.id)] ?? 1, (v) =>
            setTheta(state, vaccine.id, variant.id, v),
          ),
        );
        table.appendChild(row);
      }
      card.appendChild(table);
    } else if (vaccine.strata) {
      card.appendChild(strataEditor(vaccine.id, vaccine.strata));
      const sum = document.createElement("div");
      sum.id = `strata-sum-${vaccine.id}`;
      sum.className = "sum-line";
      card.appendChild(sum);
    }
    host.appendChild(card);
  }
  refreshComparisonOptions();
}

function renderCoverage(): void {
  const host = el("coverage-body");
  host.innerHTML = "";
  for (const arm of Object.keys(state.doc.coverage)) {
    const row = document.createElement("label");
    row.textContent = `${arm} `;
    row.appendChild(
      numberInput(state.doc.coverage[arm], (v) => {
        setCoverage(state, arm, v);
        updateSums();
      }),
    );
    host.appendChild(row);
  }
}

function updateSums(): void {
  const cov = coverageSum(state.doc);
  const line = el("coverage-sum");
  line.textContent = `sum ${sig6(cov)}`;
  line.className = Math.abs(cov - 1) <= 1e-9 ? "sum-line ok" : "sum-line bad";
  for (const vaccine of state.doc.vaccines) {
    if (vaccine.mode !== "all_or_none") continue;
    const node = document.getElementById(`strata-sum-${vaccine.id}`);
    if (!node) continue;
    const total = strataSum(vaccine);
    const target = vaccine.fill_remainder ? "free share" : "must equal 1";
    node.textContent = `protected sum ${sig6(total)} (${target})`;
    node.className =
      (vaccine.fill_remainder ? total <= 1 + 1e-9 : Math.abs(total - 1) <= 1e-9)
        ? "sum-line ok"
        : "sum-line bad";
  }
}

function renderEditor(): void {
  renderVariants();
  renderVaccines();
  renderCoverage();
  input("horizon").value = String(state.doc.horizon);
  updateSums();
}

// -- comparison selection ----------------------------------------------------

function refreshComparisonOptions(): void {
  const vaccineSelect = el<HTMLSelectElement>("cmp-vaccine");
  const refSelect = el<HTMLSelectElement>("cmp-vaccine-ref");
  const variantSelect = el<HTMLSelectElement>("cmp-variant");
  const otherSelect = el<HTMLSelectElement>("cmp-variant-other");
  const vaccines = state.doc.vaccines.map((v) => v.id);
  const fill = (select: HTMLSelectElement, options: string[]) => {
    const current = select.value;
    select.innerHTML = "";
    for (const value of options) {
      const opt = document.createElement("option");
      opt.value = value;
      opt.textContent = value;
      select.appendChild(opt);
    }
    if (options.includes(current)) select.value = current;
  };
  fill(vaccineSelect, vaccines);
  fill(refSelect, vaccines);
  const variants = state.doc.variants.map((v) => String(v.id));
  fill(variantSelect, variants);
  fill(otherSelect, variants);
}

function currentComparison(): ComparisonDoc {
  const type = el<HTMLSelectElement>("cmp-type").value as ComparisonDoc["type"];
  const comparison: ComparisonDoc = {
    type,
    variant: Number(el<HTMLSelectElement>("cmp-variant").value),
    vaccine: el<HTMLSelectElement>("cmp-vaccine").value,
  };
  if (type === "relative_variants") {
    comparison.variant_other = Number(el<HTMLSelectElement>("cmp-variant-other").value);
  }
  if (type === "relative_vaccines") {
    comparison.vaccine_ref = el<HTMLSelectElement>("cmp-vaccine-ref").value;
  }
  return comparison;
}

// -- curve panel ---------------------------------------------------------

async function recomputeCurves(): Promise<void> {
  const issues = validateScenario(state.doc);
  showIssues(issues);
  if (issues.length > 0) return;
  const key = scenarioKey(state.doc);
  const comparison = currentComparison();
  const start = Number(input("grid-start").value);
  const stop = Number(input("grid-stop").value);
  const points = Number(input("grid-points").value);
  setText("curve-errors", "");
  try {
    const grid = linearGrid(start, stop, points);
    const doc = state.doc;
    const result = await curveChannel.issue(key, () => scenarioKey(state.doc), async () => {
      const curves = await Promise.all(
        MEASURES.map((m) => client.curve(doc, m, comparison, grid)),
      );
      const limits = await client.limits(doc, comparison);
      const points_ = await Promise.all(
        MEASURES.map((m) => client.point(doc, m, comparison)),
      );
      return { curves, limits, points: points_ };
    });
    if (!result) return; // stale
    const series: ChartSeries[] = result.curves.map((c, k) => ({
      label: MEASURES[k],
      times: c.times,
      values: c.values,
      color: COLORS[MEASURES[k]],
    }));
    const guides: GuideLine[] = [];
    for (const m of MEASURES) {
      for (const which of ["small", "large"] as const) {
        const value = result.limits.limits[which][m];
        if (typeof value === "number") {
          guides.push({ label: `${m} ${which}`, value, color: COLORS[m] });
        }
      }
    }
    el("chart-host").innerHTML = renderChart(series, guides);
    const badges = result.curves
      .map((c, k) => `${MEASURES[k]}: ${c.time_invariant ? "time-invariant" : "time-varying"}`)
      .join("  |  ");
    setText("curve-badges", badges);
    setText(
      "point-values",
      result.points
        .map((p, k) => `${MEASURES[k].toUpperCase()} ${formatVe(p.ve)}`)
        .join("   "),
    );
    cachePut(state, result.curves[0].scenario_hash, "curve", result);
  } catch (err) {
    showServiceError("curve-errors", err);
  }
}

// -- design panel --------------------------------------------------------

function readDesignInputs(): void {
  if (!state.doc.design) return;
  const design = el<HTMLSelectElement>("design-kind").value as
    | "cohort_crr"
    | "cohort_irr"
    | "case_control_or"
    | "tnd_inclusive_or";
  state.doc.design.design = design;
  const cohort = design === "cohort_crr" || design === "cohort_irr";
  el("design-cohort-fields").style.display = cohort ? "" : "none";
  el("design-case-fields").style.display = cohort ? "none" : "";
  if (cohort) {
    state.doc.design.n = Number(input("design-n").value);
    delete state.doc.design.x;
    delete state.doc.design.r;
  } else {
    state.doc.design.x = Number(input("design-x").value);
    state.doc.design.r = Number(input("design-r").value);
    delete state.doc.design.n;
  }
  setDesignField(state, "alpha", Number(input("design-alpha").value));
  setDesignField(state, "power", Number(input("design-power").value));
  setDesignField(state, "confounder_rho", Number(input("design-rho").value));
  setText("design-rho-value", input("design-rho").value);
}

async function recomputeMdve(): Promise<void> {
  const issues = validateScenario(state.doc);
  showIssues(issues);
  if (issues.length > 0) return;
  const key = scenarioKey(state.doc);
  const comparison = currentComparison();
  setText("design-errors", "");
  try {
    const doc = state.doc;
    const result = await designChannel.issue(key, () => scenarioKey(state.doc), () =>
      client.mdve(doc, comparison),
    );
    if (!result) return;
    setText("mdve-value", `MDVE (${result.kind}) = ${sig6(result.mdve)}`);
    setText(
      "mdve-detail",
      `power ${sig6(result.achieved_power)} at alpha ${sig6(result.alpha)}, target ${sig6(result.target_power)}`,
    );
    cachePut(state, result.scenario_hash, "mdve", result);
  } catch (err) {
    setText("mdve-value", "");
    setText("mdve-detail", "");
    showServiceError("design-errors", err);
  }
}

async function runPrecision(): Promise<void> {
  const issues = validateScenario(state.doc);
  showIssues(issues);
  if (issues.length > 0) return;
  const comparison = currentComparison();
  const seed = Number(input("precision-seed").value);
  const nSim = Number(input("precision-nsim").value);
  setText("design-errors", "");
  try {
    const result = await client.precision(state.doc, comparison, nSim, seed);
    setText(
      "precision-summary",
      `VE ${sig6(result.estimate_mean)}  expected CI [${sig6(result.expected_ci[0])}, ` +
        `${sig6(result.expected_ci[1])}]  sd ${sig6(result.sd_of_estimates)}  ` +
        `degenerate ${result.n_degenerate}/${result.n_sim}  seed ${result.seed}`,
    );
    el("band-host").innerHTML = renderBand(
      result.expected_ci[0],
      result.expected_ci[1],
      result.estimate_mean,
    );
    cachePut(state, result.scenario_hash, "precision", result);
  } catch (err) {
    showServiceError("design-errors", err);
  }
}

// -- wiring -------------------------------------------------------------

const debouncedRecompute = debounce(() => {
  void recomputeCurves();
  void recomputeMdve();
}, RECOMPUTE_DEBOUNCE_MS);

function onScenarioEdited(): void {
  updateSums();
  debouncedRecompute();
}

function download(filename: string, text: string): void {
  const anchor = document.createElement("a");
  anchor.href = URL.createObjectURL(new Blob([text], { type: "application/json" }));
  anchor.download = filename;
  anchor.click();
  URL.revokeObjectURL(anchor.href);
}

export function boot(): void {
  renderEditor();
  input("precision-seed").value = String(randomSeed());

  el("add-variant").addEventListener("click", () => {
    addVariant(state);
    renderEditor();
    onScenarioEdited();
  });
  el("remove-variant").addEventListener("click", () => {
    removeVariant(state);
    renderEditor();
    onScenarioEdited();
  });
  el("add-vaccine").addEventListener("click", () => {
    addVaccine(state);
    renderEditor();
    onScenarioEdited();
  });
  el("rebalance-coverage").addEventListener("click", () => {
    rebalanceCoverage(state);
    renderEditor();
    onScenarioEdited();
  });
  input("horizon").addEventListener("input", () => {
    const v = Number(input("horizon").value);
    if (Number.isFinite(v)) {
      setHorizon(state, v);
      onScenarioEdited();
    }
  });
  el("service-url").addEventListener("change", () => {
    client.baseUrl = input("service-url").value.replace(/\/$/, "");
    onScenarioEdited();
  });

  for (const id of ["cmp-type", "cmp-variant", "cmp-variant-other", "cmp-vaccine", "cmp-vaccine-ref"]) {
    el(id).addEventListener("change", () => {
      const type = el<HTMLSelectElement>("cmp-type").value;
      el("cmp-variant-other-wrap").style.display =
        type === "relative_variants" ? "" : "none";
      el("cmp-vaccine-ref-wrap").style.display =
        type === "relative_vaccines" ? "" : "none";
      debouncedRecompute();
    });
  }
  for (const id of ["grid-start", "grid-stop", "grid-points"]) {
    el(id).addEventListener("input", debouncedRecompute);
  }
  for (const id of ["design-kind", "design-n", "design-x", "design-r", "design-alpha", "design-power", "design-rho"]) {
    el(id).addEventListener("input", () => {
      readDesignInputs();
      debouncedRecompute();
    });
  }
  el("run-precision").addEventListener("click", () => void runPrecision());
  el("randomize-seed").addEventListener("click", () => {
    input("precision-seed").value = String(randomSeed());
  });

  el("export-scenario").addEventListener("click", () =>
    download("scenario.json", exportDocument(state)),
  );
  input("import-scenario").addEventListener("change", async () => {
    const file = input("import-scenario").files?.[0];
    if (!file) return;
    try {
      importDocument(state, await file.text());
      renderEditor();
      readDesignInputs();
      onScenarioEdited();
    } catch (err) {
      setText("editor-errors", `import failed: ${err}`);
    }
  });

  input("service-url").value = client.baseUrl;
  readDesignInputs();
  debouncedRecompute();
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  boot();
}
