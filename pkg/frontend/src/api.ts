// Typed client for the calculator service. One in-flight request per panel:
// each panel owns a PanelChannel whose responses are dropped when the
// scenario moved on (stale) or a newer request was issued.

import {
  ComparisonDoc,
  CurveResponse,
  LimitsResponse,
  MdveResponse,
  MeasureKind,
  PointResponse,
  PrecisionResponse,
  ScenarioDocument,
  ServiceErrorBody,
  TndResponse,
} from "./types.js";

export class ServiceError extends Error {
  status: number;
  body: ServiceErrorBody;

  constructor(status: number, body: ServiceErrorBody) {
    super(body.message ?? body.error ?? `service error ${status}`);
    this.status = status;
    this.body = body;
  }
}

export class ApiClient {
  constructor(
    public baseUrl: string = "",
    private fetchFn: typeof fetch = fetch,
  ) {}

  private async post<T>(path: string, payload: unknown): Promise<T> {
    const res = await this.fetchFn(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
    const text = await res.text();
    const body = JSON.parse(text);
    if (!res.ok) {
      throw new ServiceError(res.status, body as ServiceErrorBody);
    }
    return body as T;
  }

  health(): Promise<{ status: string }> {
    return this.fetchFn(`${this.baseUrl}/api/v1/health`).then((r) => r.json());
  }

  point(
    scenario: ScenarioDocument,
    measure: MeasureKind,
    comparison: ComparisonDoc,
    t?: number,
  ): Promise<PointResponse> {
    return this.post("/api/v1/ve/point", { scenario, measure, comparison, t: t ?? null });
  }

  curve(
    scenario: ScenarioDocument,
    measure: MeasureKind,
    comparison: ComparisonDoc,
    grid: number[],
  ): Promise<CurveResponse> {
    return this.post("/api/v1/ve/curve", { scenario, measure, comparison, grid });
  }

  limits(scenario: ScenarioDocument, comparison: ComparisonDoc): Promise<LimitsResponse> {
    return this.post("/api/v1/ve/limits", { scenario, comparison });
  }

  tnd(scenario: ScenarioDocument, t?: number): Promise<TndResponse> {
    return this.post("/api/v1/tnd/expected-counts", { scenario, t: t ?? null });
  }

  mdve(scenario: ScenarioDocument, comparison: ComparisonDoc): Promise<MdveResponse> {
    return this.post("/api/v1/samplesize/mdve", { scenario, comparison });
  }

  precision(
    scenario: ScenarioDocument,
    comparison: ComparisonDoc,
    nSim: number,
    seed: number,
  ): Promise<PrecisionResponse> {
    return this.post("/api/v1/samplesize/precision", {
      scenario,
      comparison,
      n_sim: nSim,
      seed,
    });
  }
}

// Wraps panel requests so only the latest one lands. `scenarioKey` captures
// the scenario at issue time; the caller passes the current key again on
// arrival and stale results resolve to null instead of overwriting fresher
// state.
export class PanelChannel {
  private sequence = 0;

  async issue<T>(
    issuedKey: string,
    currentKey: () => string,
    request: () => Promise<T>,
  ): Promise<T | null> {
    const ticket = ++this.sequence;
    const result = await request();
    if (ticket !== this.sequence) return null; // superseded by a newer request
    if (currentKey() !== issuedKey) return null; // scenario changed meanwhile
    return result;
  }
}

export function linearGrid(start: number, stop: number, points: number): number[] {
  const out: number[] = [];
  for (let k = 0; k < points; k++) {
    out.push(start + ((stop - start) * k) / (points - 1));
  }
  return out;
}
