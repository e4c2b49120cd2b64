// Typed client for the steering service. The console performs no
// simulation of its own: every number on screen came from one of these
// endpoints.

export interface Snapshot {
  id: string;
  t: number;
  N: number[];
  V: (number | null)[];
  W_star: number;
  lambda: number[];
  budget_utilization: number;
  status: string;
  families: string[];
  resources: string[];
  spectral_abscissa: number | null;
  leading_pair: [number, number] | null;
  shock_count: number;
}

export interface TrajectorySlice {
  t: number[];
  N: number[][];
  W_star: number[];
  budget_utilization: number[];
  events: [number, string][];
  status: string;
}

export interface Prediction {
  field: string;
  old: number;
  new: number;
  elasticities: {
    kind: string;
    values: (number | null)[];
    labels: string[];
  } | null;
  predicted_equilibrium: number[];
  predicted_lambda: number[];
  regime_flags: { stability: string; spectral_abscissa: number };
}

export interface Analysis {
  N_star: number[];
  W_star: number;
  lambda: number[];
  eigenvalues: [number, number][];
  stability: string;
  spectral_abscissa: number;
  leading_pair: [number, number];
  valid: boolean;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function check(resp: Response): Promise<any> {
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      detail = (await resp.json()).detail ?? detail;
    } catch {
      /* keep statusText */
    }
    throw new ApiError(resp.status, detail);
  }
  return resp.json();
}

export class SteeringClient {
  constructor(private base: string = "") {}

  async createSession(config: unknown, dt?: number): Promise<Snapshot> {
    const body: any = { config };
    if (dt !== undefined) body.dt = dt;
    return check(await fetch(`${this.base}/sessions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    }));
  }

  async state(id: string): Promise<Snapshot> {
    return check(await fetch(`${this.base}/sessions/${id}/state`));
  }

  async advance(id: string, duration: number): Promise<Snapshot> {
    return check(await fetch(`${this.base}/sessions/${id}/advance`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ duration }),
    }));
  }

  async trajectory(id: string, from: number): Promise<TrajectorySlice> {
    return check(
      await fetch(`${this.base}/sessions/${id}/trajectory?from=${from}`),
    );
  }

  async previewShock(id: string, field: string, value: number):
      Promise<Prediction> {
    return check(await fetch(`${this.base}/sessions/${id}/shock/preview`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ field, value }),
    }));
  }

  async applyShock(id: string, field: string, value: number):
      Promise<Snapshot> {
    return check(await fetch(`${this.base}/sessions/${id}/shock/apply`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ field, value }),
    }));
  }

  async analyze(id: string): Promise<Analysis> {
    return check(await fetch(`${this.base}/sessions/${id}/analyze`, {
      method: "POST",
    }));
  }

  async shockLog(id: string): Promise<{ shock_log: any[] }> {
    return check(await fetch(`${this.base}/sessions/${id}/shocks`));
  }

  async defaultConfig(): Promise<unknown> {
    return check(await fetch(`${this.base}/default-config`));
  }
}
