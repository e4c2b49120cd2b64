// View model: a rolling trajectory window plus pinned predictions.
// Everything here derives from service responses; the only local
// computation is window bookkeeping and draft validation.

import { Analysis, Prediction, Snapshot, SteeringClient, TrajectorySlice } from "./api.js";

export interface PinnedPrediction {
  t: number;                 // session time when the shock was applied
  prediction: Prediction;    // exactly what the service said beforehand
  raw: string;               // canonical serialization for provenance
}

export interface ShockDraft {
  field: string;   // "w[j]" or "R[m]"
  value: number;
}

export function validateDraft(draft: ShockDraft | null,
    snapshot: Snapshot | null): string | null {
  if (!draft || !snapshot) return "no draft";
  const m = draft.field.match(/^(w|R|B|gamma)\[?/);
  if (!m) return `unknown field ${draft.field}`;
  if (!Number.isFinite(draft.value)) return "value must be a number";
  if (draft.field.startsWith("w")) {
    if (draft.value <= 0 || draft.value >= 1) {
      return "weights must stay strictly between 0 and 1";
    }
  }
  if (draft.field.startsWith("R") || draft.field === "B") {
    if (draft.value <= 0) return "endowments must stay positive";
  }
  return null;
}

export class ConsoleStore {
  snapshot: Snapshot | null = null;
  analysis: Analysis | null = null;
  t: number[] = [];
  N: number[][] = [];
  W: number[] = [];
  util: number[] = [];
  events: [number, string][] = [];
  pinned: PinnedPrediction[] = [];
  draft: ShockDraft | null = null;
  preview: Prediction | null = null;
  previewError: string | null = null;
  stale = false;
  windowSpan = 60; // time units kept in the rolling window
  private cursor = -1;

  constructor(public client: SteeringClient, public sessionId: string) {}

  async refresh(): Promise<void> {
    try {
      const slice = await this.client.trajectory(this.sessionId, this.cursor);
      this.absorb(slice);
      this.snapshot = await this.client.state(this.sessionId);
      this.stale = false;
    } catch {
      this.stale = true; // keep the last data on screen, flag it
    }
  }

  absorb(slice: TrajectorySlice): void {
    for (let i = 0; i < slice.t.length; i++) {
      this.t.push(slice.t[i]);
      this.N.push(slice.N[i]);
      this.W.push(slice.W_star[i]);
      this.util.push(slice.budget_utilization[i]);
    }
    this.events.push(...slice.events);
    if (slice.t.length) this.cursor = slice.t[slice.t.length - 1];
    const cutoff = this.cursor - this.windowSpan;
    let drop = 0;
    while (drop < this.t.length - 2 && this.t[drop] < cutoff) drop++;
    if (drop > 0) {
      this.t.splice(0, drop);
      this.N.splice(0, drop);
      this.W.splice(0, drop);
      this.util.splice(0, drop);
    }
  }

  async requestPreview(): Promise<void> {
    this.preview = null;
    this.previewError = validateDraft(this.draft, this.snapshot);
    if (this.previewError || !this.draft) return;
    try {
      this.preview = await this.client.previewShock(
        this.sessionId, this.draft.field, this.draft.value);
    } catch (err: any) {
      this.previewError = err.status === 422
        ? `prediction unavailable: ${err.message}`
        : String(err.message ?? err);
    }
  }

  get applyEnabled(): boolean {
    return this.preview !== null && this.previewError === null &&
      this.draft !== null;
  }

  async confirmApply(): Promise<void> {
    if (!this.applyEnabled || !this.draft || !this.preview) return;
    const pin: PinnedPrediction = {
      t: this.snapshot?.t ?? 0,
      prediction: this.preview,
      raw: JSON.stringify(this.preview),
    };
    await this.client.applyShock(this.sessionId, this.draft.field,
      this.draft.value);
    this.pinned.push(pin);
    this.preview = null;
    this.draft = null;
  }

  async refreshAnalysis(): Promise<void> {
    try {
      this.analysis = await this.client.analyze(this.sessionId);
    } catch {
      this.analysis = null;
    }
  }
}
