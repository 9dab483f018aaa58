// Thin client for the surrogate prediction service. All displayed
// numbers come from these responses verbatim; the UI never recomputes
// or rescales depths.

export interface Meta {
  d_x: number;
  d_y: number;
  H: number;
  W: number;
  model_fingerprint: string;
  parameter_count: number;
}

export interface LocationPoint {
  id: number;
  lon: number;
  lat: number;
  segment_id: number;
}

export interface PredictResponse {
  depths: number[];
  latency_ms: number;
  model_fingerprint: string;
  diff?: number[];
}

export interface CompareResponse {
  a: string;
  b: string;
  diff: number[];
  latency_ms: number;
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class ApiClient {
  constructor(private baseUrl: string, private fetchImpl: FetchLike = fetch.bind(globalThis)) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!res.ok) {
      let detail = res.statusText;
      try {
        const body = await res.json();
        if (body && body.detail) detail = String(body.detail);
      } catch {
        // keep statusText
      }
      throw new ApiError(res.status, detail);
    }
    return (await res.json()) as T;
  }

  getMeta(): Promise<Meta> {
    return this.request<Meta>("/meta");
  }

  async getLocations(): Promise<LocationPoint[]> {
    const body = await this.request<{ locations: LocationPoint[] }>("/locations");
    return body.locations;
  }

  predict(scenario: string, reference?: string): Promise<PredictResponse> {
    return this.request<PredictResponse>("/predict", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(reference ? { scenario, reference } : { scenario }),
    });
  }

  compare(a: string, b: string): Promise<CompareResponse> {
    return this.request<CompareResponse>("/compare", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ a, b }),
    });
  }
}
