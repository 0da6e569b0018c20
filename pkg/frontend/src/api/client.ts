// Thin typed client for the trace server. Every number shown in the UI
// comes out of one of these calls; the request log makes that auditable.

import type {
  AggGanttResponse,
  ApiErrorBody,
  CounterInfo,
  CounterResponse,
  DatasetMeta,
  DepsResponse,
  GanttResponse,
  HistogramResponse,
  IntervalAtResponse,
  IntervalPayload,
  JobStatus,
  SourceResponse,
  TreeResponse,
  UtilizationResponse,
  Window,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export interface LoggedRequest {
  url: string;
  view?: string;
}

/** Per-request tagging for server-side cancellation of stale renders. */
export interface ViewTag {
  view: string;
  gen: number;
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

type Param = string | number | boolean | null | undefined;

export class ApiClient {
  /** Chronological log of every issued request, for linkage audits. */
  readonly requestLog: LoggedRequest[] = [];

  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private url(path: string, params?: Record<string, Param>): string {
    const query = new URLSearchParams();
    for (const [key, value] of Object.entries(params ?? {})) {
      if (value !== null && value !== undefined) query.set(key, String(value));
    }
    const suffix = query.size > 0 ? `?${query.toString()}` : "";
    return `${this.baseUrl}/api/v1${path}${suffix}`;
  }

  /**
   * Issue a GET. Returns null on 409 SUPERSEDED: the server dropped the
   * request as stale, which callers treat as a silent discard.
   */
  private async get<T>(
    path: string,
    params?: Record<string, Param>,
    view?: string,
  ): Promise<T | null> {
    const url = this.url(path, params);
    this.requestLog.push(view === undefined ? { url } : { url, view });
    const resp = await this.fetchFn(url);
    if (resp.status === 409) return null;
    if (!resp.ok) {
      let code = "HTTP_ERROR";
      let message = `${resp.status} for ${path}`;
      try {
        const body = (await resp.json()) as ApiErrorBody;
        code = body.error.code;
        message = body.error.message;
      } catch {
        // Non-JSON error body; keep the fallback message.
      }
      throw new ApiError(resp.status, code, message);
    }
    return (await resp.json()) as T;
  }

  private tagged(params: Record<string, Param>, tag?: ViewTag): Record<string, Param> {
    if (!tag) return params;
    return { ...params, view: tag.view, gen: tag.gen };
  }

  listDatasets(): Promise<DatasetMeta[]> {
    return this.get<DatasetMeta[]>("/datasets").then((r) => r ?? []);
  }

  job(jobId: string): Promise<JobStatus | null> {
    return this.get<JobStatus>(`/jobs/${jobId}`);
  }

  utilization(
    dsId: string,
    win: Window,
    opts: { node?: number; locations?: string; selection?: string } = {},
    tag?: ViewTag,
  ): Promise<UtilizationResponse | null> {
    return this.get(
      `/datasets/${dsId}/utilization`,
      this.tagged({ ...win, ...opts }, tag),
      tag?.view,
    );
  }

  gantt(
    dsId: string,
    win: Window,
    opts: { loc0?: number; loc1?: number; selection?: string } = {},
    tag?: ViewTag,
  ): Promise<GanttResponse | null> {
    return this.get(
      `/datasets/${dsId}/gantt`,
      this.tagged({ ...win, ...opts }, tag),
      tag?.view,
    );
  }

  histogram(
    dsId: string,
    bins: number,
    opts: { node?: number; scale?: "linear" | "log" } = {},
  ): Promise<HistogramResponse | null> {
    return this.get(`/datasets/${dsId}/histogram`, { bins, ...opts });
  }

  tree(dsId: string, depth?: number): Promise<TreeResponse | null> {
    return this.get(`/datasets/${dsId}/tree`, { depth });
  }

  aggGantt(
    dsId: string,
    node: number,
    win: Window,
    tag?: ViewTag,
  ): Promise<AggGanttResponse | null> {
    return this.get(
      `/datasets/${dsId}/agg-gantt`,
      this.tagged({ node, ...win }, tag),
      tag?.view,
    );
  }

  counters(dsId: string): Promise<CounterInfo[]> {
    return this.get<CounterInfo[]>(`/datasets/${dsId}/counters`).then(
      (r) => r ?? [],
    );
  }

  counter(
    dsId: string,
    name: string,
    win: Window,
    opts: { per_location?: number } = {},
    tag?: ViewTag,
  ): Promise<CounterResponse | null> {
    return this.get(
      `/datasets/${dsId}/counter`,
      this.tagged({ name, ...win, ...opts }, tag),
      tag?.view,
    );
  }

  interval(dsId: string, guid: number): Promise<IntervalPayload | null> {
    return this.get(`/datasets/${dsId}/interval/${guid}`);
  }

  intervalAt(
    dsId: string,
    time: number,
    loc: number,
  ): Promise<IntervalAtResponse | null> {
    return this.get(`/datasets/${dsId}/interval-at`, { time, loc });
  }

  deps(
    dsId: string,
    guid: number,
    descendants = false,
  ): Promise<DepsResponse | null> {
    return this.get(`/datasets/${dsId}/deps/${guid}`, {
      descendants: descendants ? 1 : 0,
    });
  }

  source(dsId: string): Promise<SourceResponse | null> {
    return this.get(`/datasets/${dsId}/source`);
  }
}
