/** Typed client for the prediction service HTTP API. */

export interface NodeDto {
  id: string;
  x: number;
  y: number;
}

export interface EdgeDto {
  id: string;
  from: string;
  to: string;
  highway_class: string;
  district: string | null;
  base_volume: number;
}

export interface NetworkDto {
  nodes: NodeDto[];
  edges: EdgeDto[];
}

export interface DistrictsDto {
  ids: string[];
  adjacency: [string, string][];
  member_edges: Record<string, string[]>;
}

export interface WhatIfRequest {
  districts: string[];
  edges: string[];
  reduction: number;
}

export interface EdgePrediction {
  edge_id: string;
  delta_volume: number;
  percent_change: number | null;
  base_volume: number;
}

export interface WhatIfResponse {
  predictions: EdgePrediction[];
  checkpoint_id: string;
  scaler_version: string;
  latency_ms: number;
}

export interface HealthDto {
  status: string;
  checkpoint_id: string;
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (u, i) => fetch(u, i),
  ) {}

  private async get<T>(path: string): Promise<T> {
    const res = await this.fetchFn(this.baseUrl + path);
    if (!res.ok) throw new ApiError(res.status, await res.text());
    return res.json() as Promise<T>;
  }

  health(): Promise<HealthDto> {
    return this.get("/health");
  }

  network(): Promise<NetworkDto> {
    return this.get("/network");
  }

  districts(): Promise<DistrictsDto> {
    return this.get("/districts");
  }

  async predict(req: WhatIfRequest): Promise<WhatIfResponse> {
    const res = await this.fetchFn(this.baseUrl + "/predict", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(req),
    });
    if (!res.ok) throw new ApiError(res.status, await res.text());
    return res.json() as Promise<WhatIfResponse>;
  }
}
