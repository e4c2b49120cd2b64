import { beforeEach, describe, expect, it, vi } from "vitest";
import type { Prediction, Snapshot } from "../src/api.js";
import { ConsoleStore, validateDraft } from "../src/state.js";

const snapshot: Snapshot = {
  id: "s1", t: 0, N: [1, 1, 1], V: [0, 0, 0], W_star: 1.0,
  lambda: [0.1, 0.2], budget_utilization: 0.4, status: "running",
  families: ["a", "b", "c"], resources: ["x", "y"],
  spectral_abscissa: null, leading_pair: null, shock_count: 0,
};

const prediction: Prediction = {
  field: "R[0]", old: 10, new: 12,
  elasticities: { kind: "population_wrt_endowment",
    values: [1.2, -0.3, 0.1], labels: ["a", "b", "c"] },
  predicted_equilibrium: [1.2, 0.9, 1.0],
  predicted_lambda: [0.09, 0.21],
  regime_flags: { stability: "stable-node", spectral_abscissa: -0.2 },
};

function mockClient(overrides: Record<string, any> = {}) {
  return {
    trajectory: vi.fn(async (_id: string, from: number) => ({
      t: [from + 0.5, from + 1.0], N: [[1, 1, 1], [1.1, 1, 0.9]],
      W_star: [1.0, 1.01], budget_utilization: [0.4, 0.41],
      events: [], status: "running",
    })),
    state: vi.fn(async () => snapshot),
    previewShock: vi.fn(async () => prediction),
    applyShock: vi.fn(async () => snapshot),
    analyze: vi.fn(async () => { throw new Error("none"); }),
    ...overrides,
  } as any;
}

describe("validateDraft", () => {
  it("rejects weights outside the open unit interval before any request", () => {
    expect(validateDraft({ field: "w[0]", value: -0.2 }, snapshot)).toMatch(/weights/);
    expect(validateDraft({ field: "w[0]", value: 1.4 }, snapshot)).toMatch(/weights/);
    expect(validateDraft({ field: "w[0]", value: 0.3 }, snapshot)).toBeNull();
  });

  it("rejects nonpositive endowments", () => {
    expect(validateDraft({ field: "R[1]", value: 0 }, snapshot)).toMatch(/positive/);
    expect(validateDraft({ field: "R[1]", value: 5 }, snapshot)).toBeNull();
  });

  it("treats a missing draft as invalid", () => {
    expect(validateDraft(null, snapshot)).toBe("no draft");
  });
});

describe("ConsoleStore", () => {
  let store: ConsoleStore;

  beforeEach(() => {
    store = new ConsoleStore(mockClient(), "s1");
  });

  it("absorbs trajectory slices and advances its cursor", async () => {
    await store.refresh();
    const firstLen = store.t.length;
    const cursor = store.t[store.t.length - 1];
    await store.refresh();
    expect(store.t.length).toBeGreaterThan(firstLen);
    expect(store.client.trajectory).toHaveBeenLastCalledWith("s1", cursor);
    expect(store.stale).toBe(false);
  });

  it("drops old samples beyond the rolling window", () => {
    store.windowSpan = 1.0;
    for (let i = 0; i < 50; i++) {
      store.absorb({ t: [i * 0.5], N: [[1, 1, 1]], W_star: [1],
        budget_utilization: [0.4], events: [], status: "running" });
    }
    expect(store.t[0]).toBeGreaterThan(20);
    expect(store.t.length).toBeLessThan(10);
  });

  it("flags stale data when the service is unreachable and keeps state", async () => {
    await store.refresh();
    const kept = store.t.length;
    store.client.trajectory = vi.fn(async () => { throw new Error("down"); });
    await store.refresh();
    expect(store.stale).toBe(true);
    expect(store.t.length).toBe(kept);
  });

  it("pins the previewed prediction verbatim on apply", async () => {
    store.snapshot = snapshot;
    store.draft = { field: "R[0]", value: 12 };
    await store.requestPreview();
    expect(store.applyEnabled).toBe(true);
    const raw = JSON.stringify(store.preview);
    await store.confirmApply();
    expect(store.pinned.length).toBe(1);
    expect(store.pinned[0].raw).toBe(raw);
    expect(store.client.applyShock).toHaveBeenCalledWith("s1", "R[0]", 12);
  });

  it("disables apply while the draft is invalid", async () => {
    store.snapshot = snapshot;
    store.draft = { field: "w[1]", value: -0.5 };
    await store.requestPreview();
    expect(store.previewError).toMatch(/weights/);
    expect(store.applyEnabled).toBe(false);
    expect(store.client.previewShock).not.toHaveBeenCalled();
  });

  it("reports a 422 preview as unavailable and disables apply", async () => {
    store.snapshot = snapshot;
    store.client.previewShock = vi.fn(async () => {
      const err: any = new Error("no equilibrium near the current state");
      err.status = 422;
      throw err;
    });
    store.draft = { field: "R[0]", value: 12 };
    await store.requestPreview();
    expect(store.previewError).toMatch(/prediction unavailable/);
    expect(store.applyEnabled).toBe(false);
  });
});
