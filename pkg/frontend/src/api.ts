// Typed client for the campaign service. Every number shown in the UI comes
// straight from these payloads; the client never post-processes values.

export interface MeasurementPayload {
  mean: number;
  std: number;
}

export interface ObservationPayload {
  id: string;
  condition: number[];
  round: number;
  pulse_voltage: number | null;
  label: string | null;
  dispersion: MeasurementPayload | null;
  leakage: MeasurementPayload | null;
  unmeasurable: boolean;
  device_count: number;
}

export interface RoundPayload {
  index: number;
  strategy: string;
  hitl_enabled: boolean;
  suggested: string[];
  status: string;
}

export interface ParameterSpecPayload {
  name: string;
  min: number;
  max: number;
  step: number;
  unit: string;
}

export interface CampaignPayload {
  space: ParameterSpecPayload[];
  config: Record<string, unknown>;
  observations: ObservationPayload[];
  rounds: RoundPayload[];
  functional_count: number;
  scored_count: number;
}

export interface ModelFrontPoint {
  dispersion: number;
  leakage: number;
  dispersion_std: number;
  leakage_std: number;
  condition: number[];
}

export interface ParetoPayload {
  measured: ObservationPayload[];
  front: ObservationPayload[];
  hypervolume: number;
  ref: number[];
  model_front: ModelFrontPoint[] | null;
}

export interface HypervolumePayload {
  ref: number[];
  hypervolume: number[];
}

export interface ShapScatterPoint {
  id: string;
  feature: string;
  feature_value: number;
  feature_value_normalized: number;
  phi: number;
}

export interface ShapPayload {
  target: string;
  ranking: string[];
  mean_abs_phi: Record<string, number>;
  scatter: ShapScatterPoint[];
}

export interface HeatmapPayload {
  target?: string;
  axis_i: number[];
  axis_j: number[];
  pair: number[];
  fixed: number[];
  raw?: number[][];
  constrained?: number[][] | null;
  mu_conversion?: number[][];
  p_constraint?: number[][];
}

export interface WhatIfPayload {
  condition: number[];
  dispersion: { mean: number; std: number };
  leakage: { mean: number; std: number };
  p_constraint?: number;
}

export class ApiError extends Error {
  constructor(public status: number, public detail: string) {
    super(`${status}: ${detail}`);
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let detail = response.statusText;
  try {
    const body = await response.json();
    if (typeof body.detail === "string") detail = body.detail;
    else if (body.detail) detail = JSON.stringify(body.detail);
  } catch {
    // non-JSON error body: keep the status text
  }
  return new ApiError(response.status, detail);
}

export class Client {
  constructor(private base: string = "") {}

  private async get<T>(path: string): Promise<T> {
    const response = await fetch(this.base + path);
    if (!response.ok) throw await parseError(response);
    return response.json() as Promise<T>;
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const response = await fetch(this.base + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) throw await parseError(response);
    return response.json() as Promise<T>;
  }

  getCampaign(): Promise<CampaignPayload> {
    return this.get("/campaign");
  }

  getRound(index: number): Promise<RoundPayload & { observations: ObservationPayload[] }> {
    return this.get(`/rounds/${index}`);
  }

  getPareto(): Promise<ParetoPayload> {
    return this.get("/pareto");
  }

  getHypervolume(): Promise<HypervolumePayload> {
    return this.get("/hypervolume");
  }

  getShap(target: string): Promise<ShapPayload> {
    return this.get(`/shap?target=${encodeURIComponent(target)}`);
  }

  getAcqMap(pair: [number, number], target: string,
            fixed?: string): Promise<HeatmapPayload> {
    const fixedPart = fixed ? `&fixed=${encodeURIComponent(fixed)}` : "";
    return this.get(`/acq-map?pair=${pair[0]},${pair[1]}&target=${target}${fixedPart}`);
  }

  getConstraintMap(pair: [number, number], fixed?: string): Promise<HeatmapPayload> {
    const fixedPart = fixed ? `&fixed=${encodeURIComponent(fixed)}` : "";
    return this.get(`/constraint-map?pair=${pair[0]},${pair[1]}${fixedPart}`);
  }

  postScore(id: string, label: string, clientToken?: string): Promise<ObservationPayload> {
    return this.post("/scores", { id, label, client_token: clientToken });
  }

  postMeasurements(id: string, dispersion: MeasurementPayload,
                   leakage: MeasurementPayload,
                   clientToken?: string): Promise<ObservationPayload> {
    return this.post("/observations",
                     { id, dispersion, leakage, client_token: clientToken });
  }

  postUnmeasurable(id: string, clientToken?: string): Promise<ObservationPayload> {
    return this.post("/observations",
                     { id, unmeasurable: true, client_token: clientToken });
  }

  nextRound(clientToken?: string): Promise<RoundPayload & { observations: ObservationPayload[] }> {
    return this.post("/rounds/next", { client_token: clientToken });
  }

  whatIf(condition: number[]): Promise<WhatIfPayload> {
    return this.post("/whatif", { condition });
  }
}
