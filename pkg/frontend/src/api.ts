/**
 * Typed client for the registry service HTTP contract.
 *
 * Every probability the workbench displays comes from one of these calls;
 * the client never computes posteriors itself.
 */

export interface RecordSummary {
  id: string;
  title: string;
  description: string;
  author: string;
  keywords: string[];
  created_at: string;
  updated_at: string;
}

export interface ModelRecord extends RecordSummary {
  script: string;
}

export interface CategoricalMarginal {
  type: "categorical";
  states: string[];
  probabilities: number[];
}

export interface MixtureComponent {
  weight: number;
  mean: number;
  variance: number;
}

export interface MixtureMarginal {
  type: "mixture";
  components: MixtureComponent[];
}

export type Marginal = CategoricalMarginal | MixtureMarginal;
export type MarginalsDoc = Record<string, Marginal>;

export interface MergeReport {
  shared: string[];
  method: string;
  objective: number | null;
  iterations: number | null;
  sample_count: number | null;
  warnings: string[];
}

export interface ApiErrorBody {
  code: string;
  message: string;
  details: Record<string, unknown>;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly body: ApiErrorBody,
  ) {
    super(body.message);
  }
}

async function parseError(response: Response): Promise<never> {
  let body: ApiErrorBody = {
    code: "http_error",
    message: `${response.status} ${response.statusText}`,
    details: {},
  };
  try {
    body = (await response.json()) as ApiErrorBody;
  } catch {
    // non-JSON error body; keep the fallback
  }
  throw new ApiError(response.status, body);
}

export class ApiClient {
  constructor(readonly baseUrl: string = "") {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
    signal?: AbortSignal,
  ): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      method,
      signal,
      headers: body === undefined ? undefined : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      await parseError(response);
    }
    if (response.status === 204) {
      return undefined as T;
    }
    return (await response.json()) as T;
  }

  search(query: string, signal?: AbortSignal): Promise<RecordSummary[]> {
    const suffix = query ? `?q=${encodeURIComponent(query)}` : "";
    return this.request("GET", `/models${suffix}`, undefined, signal);
  }

  get(id: string, signal?: AbortSignal): Promise<ModelRecord> {
    return this.request("GET", `/models/${id}`, undefined, signal);
  }

  register(
    fields: { title: string; script: string; description?: string; author?: string; keywords?: string[] },
    signal?: AbortSignal,
  ): Promise<{ id: string }> {
    return this.request("POST", "/models", fields, signal);
  }

  update(id: string, fields: Partial<Omit<ModelRecord, "id" | "created_at" | "updated_at">>): Promise<ModelRecord> {
    return this.request("PUT", `/models/${id}`, fields);
  }

  remove(id: string): Promise<void> {
    return this.request("DELETE", `/models/${id}`);
  }

  infer(
    id: string,
    evidence: string,
    query: string[],
    signal?: AbortSignal,
  ): Promise<MarginalsDoc> {
    return this.request("POST", `/models/${id}/infer`, { evidence, query }, signal);
  }

  merge(
    id1: string,
    id2: string,
    method: string,
    options?: Record<string, unknown>,
  ): Promise<{ id: string; report: MergeReport }> {
    return this.request("POST", "/merge", { id1, id2, method, options });
  }
}
