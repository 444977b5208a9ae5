// Typed client for the restoration service. The fetch implementation is
// injectable so tests can mock the wire without faking this module.

import type {
  Backend,
  ClickPoint,
  CommitResponse,
  DegradationParamJson,
  EnhanceJson,
  EstimateResponse,
  PreviewResponse,
  SegmentResponse,
  SessionCreated,
  SessionStateJson,
  Task,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  status: number;
  reason?: string;
  fallback?: string;

  constructor(status: number, detail: string, reason?: string, fallback?: string) {
    super(detail);
    this.status = status;
    this.reason = reason;
    this.fallback = fallback;
  }
}

async function parseError(resp: Response): Promise<ApiError> {
  let detail = `HTTP ${resp.status}`;
  let reason: string | undefined;
  let fallback: string | undefined;
  try {
    const body = await resp.json();
    detail = body.detail ?? detail;
    reason = body.reason;
    fallback = body.fallback;
  } catch {
    // non-JSON error body; keep the status line
  }
  return new ApiError(resp.status, detail, reason, fallback);
}

export interface SegmentRequest {
  points: ClickPoint[];
  tolerance?: number;
  backend?: Backend;
  feather_radius?: number;
  replace_layer_id?: string | null;
}

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path, init);
    if (!resp.ok) {
      throw await parseError(resp);
    }
    return (await resp.json()) as T;
  }

  private post<T>(path: string, body: unknown, signal?: AbortSignal): Promise<T> {
    return this.json<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
      signal,
    });
  }

  createSession(image: BodyInit, contentType: string): Promise<SessionCreated> {
    return this.json<SessionCreated>("/sessions", {
      method: "POST",
      headers: { "Content-Type": contentType },
      body: image,
    });
  }

  getState(sessionId: string, includeMasks = false): Promise<SessionStateJson> {
    const query = includeMasks ? "?include_masks=true" : "";
    return this.json<SessionStateJson>(`/sessions/${sessionId}${query}`);
  }

  segment(sessionId: string, req: SegmentRequest): Promise<SegmentResponse> {
    return this.post<SegmentResponse>(`/sessions/${sessionId}/segment`, req);
  }

  estimate(sessionId: string, layerId: string, task: Task): Promise<EstimateResponse> {
    return this.post<EstimateResponse>(
      `/sessions/${sessionId}/layers/${layerId}/estimate`,
      { task },
    );
  }

  preview(
    sessionId: string,
    layerId: string,
    strengthScale: number,
    signal?: AbortSignal,
  ): Promise<PreviewResponse> {
    return this.post<PreviewResponse>(
      `/sessions/${sessionId}/layers/${layerId}/restore`,
      { preview: true, strength_scale: strengthScale },
      signal,
    );
  }

  commit(
    sessionId: string,
    layerId: string,
    strengthScale: number,
    override?: DegradationParamJson,
  ): Promise<CommitResponse> {
    const body: Record<string, unknown> = {
      preview: false,
      strength_scale: strengthScale,
    };
    if (override) {
      body.override = override;
    }
    return this.post<CommitResponse>(
      `/sessions/${sessionId}/layers/${layerId}/restore`,
      body,
    );
  }

  setEnhance(sessionId: string, layerId: string, settings: EnhanceJson): Promise<unknown> {
    return this.post(`/sessions/${sessionId}/layers/${layerId}/enhance`, settings);
  }

  async compositePng(sessionId: string): Promise<Blob> {
    const resp = await this.fetchFn(`${this.baseUrl}/sessions/${sessionId}/composite`);
    if (!resp.ok) {
      throw await parseError(resp);
    }
    return resp.blob();
  }

  async exportImage(
    sessionId: string,
    format: "png" | "jpeg",
    quality = 90,
    force = false,
  ): Promise<Blob> {
    const resp = await this.fetchFn(`${this.baseUrl}/sessions/${sessionId}/export`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ format, quality, force }),
    });
    if (!resp.ok) {
      throw await parseError(resp);
    }
    return resp.blob();
  }
}
