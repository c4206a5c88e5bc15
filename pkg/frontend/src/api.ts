/** Thin fetch client for the api-service; the only network surface of the UI. */

import type {
  CounterfactualRequest,
  HybridReport,
  MetricsResponse,
  PatientDetail,
  PatientsResponse,
  SchemaResponse,
} from './types.js';

export class ApiError extends Error {
  constructor(
    readonly code: number,
    message: string,
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

async function parseError(response: Response): Promise<ApiError> {
  try {
    const body = (await response.json()) as { code?: number; message?: string };
    return new ApiError(body.code ?? response.status, body.message ?? response.statusText);
  } catch {
    return new ApiError(response.status, response.statusText);
  }
}

export class ApiClient {
  constructor(private readonly base: string = '') {}

  private async getJson<T>(path: string): Promise<T> {
    const response = await fetch(this.base + path);
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as T;
  }

  private async postJson<T>(path: string, body: unknown): Promise<T> {
    const response = await fetch(this.base + path, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(body),
    });
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as T;
  }

  schema(): Promise<SchemaResponse> {
    return this.getJson('/schema');
  }

  patients(limit = 200, offset = 0): Promise<PatientsResponse> {
    return this.getJson(`/patients?limit=${limit}&offset=${offset}`);
  }

  patient(id: number): Promise<PatientDetail> {
    return this.getJson(`/patients/${id}`);
  }

  counterfactuals(request: CounterfactualRequest): Promise<HybridReport> {
    return this.postJson('/counterfactuals', request);
  }

  metrics(): Promise<MetricsResponse> {
    return this.getJson('/model/metrics');
  }

  health(): Promise<{ status: string }> {
    return this.getJson('/healthz');
  }
}
