import { describe, expect, it } from "vitest";

import { ApiClient, PanelChannel, ServiceError, linearGrid } from "../src/api.js";
import { defaultScenario } from "../src/state.js";

function fakeFetch(status: number, body: unknown) {
  const calls: { url: string; payload: any }[] = [];
  const fn = (async (url: any, init?: any) => {
    calls.push({ url: String(url), payload: init ? JSON.parse(init.body) : null });
    return {
      ok: status >= 200 && status < 300,
      status,
      text: async () => JSON.stringify(body),
      json: async () => body,
    } as unknown as Response;
  }) as typeof fetch;
  return { fn, calls };
}

describe("ApiClient", () => {
  it("posts the scenario and comparison to the point endpoint", async () => {
    const { fn, calls } = fakeFetch(200, { ve: 0.5, scenario_hash: "h" });
    const client = new ApiClient("http://svc", fn);
    const doc = defaultScenario();
    await client.point(doc, "crr", { type: "variant_specific", variant: 1, vaccine: "m" }, 2);
    expect(calls[0].url).toBe("http://svc/api/v1/ve/point");
    expect(calls[0].payload.measure).toBe("crr");
    expect(calls[0].payload.scenario.coverage.placebo).toBe(0.5);
    expect(calls[0].payload.t).toBe(2);
  });

  it("maps error bodies onto ServiceError", async () => {
    const { fn } = fakeFetch(422, { error: "undefined_ve", message: "zero cell" });
    const client = new ApiClient("", fn);
    await expect(
      client.mdve(defaultScenario(), { type: "variant_specific", variant: 1, vaccine: "m" }),
    ).rejects.toSatisfy((err: unknown) => {
      return (
        err instanceof ServiceError &&
        err.status === 422 &&
        err.body.error === "undefined_ve"
      );
    });
  });

  it("serializes precision parameters with snake_case keys", async () => {
    const { fn, calls } = fakeFetch(200, { scenario_hash: "h" });
    const client = new ApiClient("", fn);
    await client.precision(
      defaultScenario(),
      { type: "variant_specific", variant: 1, vaccine: "m" },
      500,
      7,
    );
    expect(calls[0].payload.n_sim).toBe(500);
    expect(calls[0].payload.seed).toBe(7);
  });
});

describe("PanelChannel", () => {
  it("drops superseded responses", async () => {
    const channel = new PanelChannel();
    let release!: () => void;
    const slow = channel.issue("k1", () => "k1", () =>
      new Promise<string>((resolve) => (release = () => resolve("slow"))),
    );
    const fast = await channel.issue("k1", () => "k1", async () => "fast");
    release();
    expect(await slow).toBeNull();
    expect(fast).toBe("fast");
  });

  it("drops responses when the scenario key moved on", async () => {
    const channel = new PanelChannel();
    let key = "before";
    const pending = channel.issue("before", () => key, async () => "value");
    key = "after";
    expect(await pending).toBeNull();
  });
});

describe("linearGrid", () => {
  it("hits both endpoints with even spacing", () => {
    const grid = linearGrid(1, 3, 5);
    expect(grid).toEqual([1, 1.5, 2, 2.5, 3]);
  });
});
