import type {
  DatasetSummary,
  EvalPayload,
  HistogramPayload,
  InstancePage,
  WhatIfParams,
} from "./types.js";

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

/** Thin typed client for the ambiprune read-only API. */
export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async get<T>(path: string): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`);
    if (!response.ok) {
      throw new ApiError(response.status, await response.text());
    }
    return (await response.json()) as T;
  }

  summary(): Promise<DatasetSummary> {
    return this.get("/dataset/summary");
  }

  histogram(bins = 20): Promise<HistogramPayload> {
    return this.get(`/ambiguity/histogram?bins=${bins}`);
  }

  instances(
    minAmb: number,
    maxAmb: number,
    page = 1,
    pageSize = 24,
  ): Promise<InstancePage> {
    return this.get(
      `/instances?min_amb=${minAmb}&max_amb=${maxAmb}` +
        `&page=${page}&page_size=${pageSize}`,
    );
  }

  async whatIf(params: WhatIfParams): Promise<EvalPayload> {
    const response = await this.fetchFn(`${this.baseUrl}/whatif`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(params),
    });
    if (!response.ok) {
      throw new ApiError(response.status, await response.text());
    }
    return (await response.json()) as EvalPayload;
  }
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(`HTTP ${status}: ${message}`);
  }
}
