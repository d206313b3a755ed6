/**
 * Typed REST client for the campaign service.
 *
 * Every mutation carries an `If-Match` revision header; a stale revision
 * surfaces as RevisionConflict so the UI can prompt instead of clobbering.
 * The client does no numerical work: all values come from the server.
 */

export interface PosteriorPoint {
  mean: number;
  variance: number;
}

export interface Suggestion {
  x_next: number[];
  acquisition_value: number;
  policy: string;
  posterior_at_x: PosteriorPoint | null;
  incumbent: { x: number[]; mean: number } | null;
}

export interface Observation {
  x: number[];
  y: number;
  timestamp: string;
  tag: string;
}

export interface BoxDomain {
  kind: "box";
  lo: number[];
  hi: number[];
}

export interface FiniteDomain {
  kind: "finite";
  points: number[][];
}

export interface CampaignConfig {
  dimension: number;
  domain: BoxDomain | FiniteDomain;
  kernel_family: string;
  matern_nu: number;
  noise_mode: string;
  acquisition_policy: string;
  refit_every: number;
  rng_seed: number;
}

export interface CampaignSummary {
  campaign_id: string;
  config: CampaignConfig;
  revision: number;
  n: number;
  observations: Observation[];
  pending_suggestion: Suggestion | null;
}

export interface SuggestionResponse {
  campaign_id: string;
  revision: number;
  suggestion: Suggestion;
}

export interface CurveRow {
  x: number;
  mean: number;
  lower: number;
  upper: number;
  acquisition: number;
}

export interface CurveMarker {
  x: number;
  y: number;
}

export interface CurveResponse {
  campaign_id: string;
  revision: number;
  axis: number;
  rows: CurveRow[];
  markers: CurveMarker[];
}

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

export class RevisionConflict extends ApiError {
  constructor(
    status: number,
    code: string,
    message: string,
    readonly actual: number | null,
  ) {
    super(status, code, message);
    this.name = "RevisionConflict";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function raiseForStatus(response: Response): Promise<void> {
  if (response.ok) return;
  let code = "http_error";
  let message = `${response.status} ${response.statusText}`;
  let actual: number | null = null;
  try {
    const body = await response.json();
    if (body && body.error) {
      code = body.error.code ?? code;
      message = body.error.message ?? message;
      actual = typeof body.error.actual === "number" ? body.error.actual : null;
    }
  } catch {
    /* non-JSON error body; keep defaults */
  }
  if (response.status === 409 && code === "revision_mismatch") {
    throw new RevisionConflict(response.status, code, message, actual);
  }
  throw new ApiError(response.status, code, message);
}

export class CampaignClient {
  private readonly fetchImpl: FetchLike;

  constructor(
    readonly baseUrl: string = "",
    fetchImpl?: FetchLike,
  ) {
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
  }

  private async getJson<T>(path: string): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path);
    await raiseForStatus(response);
    return (await response.json()) as T;
  }

  async listCampaigns(): Promise<string[]> {
    const body = await this.getJson<{ campaigns: string[] }>("/campaigns");
    return body.campaigns;
  }

  async createCampaign(config: CampaignConfig): Promise<{ campaign_id: string; revision: number }> {
    const response = await this.fetchImpl(`${this.baseUrl}/campaigns`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(config),
    });
    await raiseForStatus(response);
    return (await response.json()) as { campaign_id: string; revision: number };
  }

  getCampaign(id: string): Promise<CampaignSummary> {
    return this.getJson(`/campaigns/${encodeURIComponent(id)}`);
  }

  getSuggestion(id: string): Promise<SuggestionResponse> {
    return this.getJson(`/campaigns/${encodeURIComponent(id)}/suggestion`);
  }

  getCurve(id: string, axis = 0, resolution = 120, slice?: number[]): Promise<CurveResponse> {
    const params = new URLSearchParams({ axis: String(axis), resolution: String(resolution) });
    if (slice && slice.length) params.set("slice", slice.join(","));
    return this.getJson(`/campaigns/${encodeURIComponent(id)}/curve?${params}`);
  }

  getDiagnostics(id: string): Promise<{ coverage: number; records: unknown[] }> {
    return this.getJson(`/campaigns/${encodeURIComponent(id)}/diagnostics`);
  }

  async postObservation(
    id: string,
    revision: number,
    x: number[],
    y: number,
    tag = "",
  ): Promise<{ revision: number; n: number }> {
    const response = await this.fetchImpl(
      `${this.baseUrl}/campaigns/${encodeURIComponent(id)}/observations`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json", "If-Match": String(revision) },
        body: JSON.stringify({ x, y, tag }),
      },
    );
    await raiseForStatus(response);
    return (await response.json()) as { revision: number; n: number };
  }
}
