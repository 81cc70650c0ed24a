/** Thin client for the annotation service endpoints. */

export interface ModelInfo {
  name: string;
  type: "flat" | "nested";
  tagsets: string[];
  languages: string[];
}

export interface SpanOut {
  start: number;
  end: number;
  type: string;
  text: string;
}

export interface SentenceOut {
  tokens: string[];
  spans: SpanOut[];
}

export interface RecognizeResponse {
  model: string;
  tagset: string | null;
  sentences: SentenceOut[];
}

export interface RecognizeRequest {
  data: string;
  model: string;
  tagset?: string;
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status?: number,
  ) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  async getModels(): Promise<ModelInfo[]> {
    const resp = await this.fetchFn(`${this.baseUrl}/models`);
    if (!resp.ok) {
      throw new ApiError(`GET /models failed: ${resp.status}`, resp.status);
    }
    return (await resp.json()) as ModelInfo[];
  }

  async recognize(req: RecognizeRequest): Promise<RecognizeResponse> {
    const body: Record<string, unknown> = {
      data: req.data,
      model: req.model,
      input: "plain",
      output: "json",
    };
    if (req.tagset) {
      body.tagset = req.tagset;
    }
    const resp = await this.fetchFn(`${this.baseUrl}/recognize`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!resp.ok) {
      let detail = `${resp.status}`;
      try {
        const payload = await resp.json();
        if (payload && typeof payload.detail === "string") {
          detail = payload.detail;
        }
      } catch {
        // keep the bare status code
      }
      throw new ApiError(`recognize failed: ${detail}`, resp.status);
    }
    return (await resp.json()) as RecognizeResponse;
  }
}
