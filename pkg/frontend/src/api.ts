/** Typed client for the read-only HTTP API, with latest-wins cancellation. */

import type {
  ApiErrorBody,
  DocView,
  LabelsResponse,
  MapDocument,
  OverlayResponse,
  QueryResponse,
  StatsResponse,
  TopicInfo,
} from './types.js';

export class ApiError extends Error {
  status: number;
  position?: number;

  constructor(status: number, body: ApiErrorBody) {
    super(body.error);
    this.status = status;
    this.position = body.position;
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl: string = '',
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, init);
    const body = await response.json();
    if (!response.ok) {
      throw new ApiError(response.status, body as ApiErrorBody);
    }
    return body as T;
  }

  getStats(): Promise<StatsResponse> {
    return this.request('/stats');
  }

  getMap(name: 'lda' | 'ccp'): Promise<MapDocument> {
    return this.request(`/map/${name}`);
  }

  getTopics(): Promise<TopicInfo[]> {
    return this.request('/topics');
  }

  getLabels(): Promise<LabelsResponse> {
    return this.request('/labels');
  }

  getDoc(docId: string): Promise<DocView> {
    return this.request(`/doc/${docId}`);
  }

  getOverlay(
    elements: string[],
    map: 'lda' | 'ccp',
    mode: 'any' | 'all',
    signal?: AbortSignal,
  ): Promise<OverlayResponse> {
    const [first, ...rest] = elements;
    const params = new URLSearchParams({ map, mode });
    if (rest.length > 0) {
      params.set('elements', rest.join(','));
    }
    return this.request(`/overlay/element/${first}?${params.toString()}`, { signal });
  }

  query(expr: string, signal?: AbortSignal): Promise<QueryResponse> {
    return this.request('/query', {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({ expr }),
      signal,
    });
  }
}

/** Serializes async lookups so only the most recent request lands. */
export class LatestWins {
  private controller: AbortController | null = null;

  async run<T>(task: (signal: AbortSignal) => Promise<T>): Promise<T | null> {
    this.controller?.abort();
    const controller = new AbortController();
    this.controller = controller;
    try {
      const result = await task(controller.signal);
      return this.controller === controller ? result : null;
    } catch (err) {
      if ((err as Error).name === 'AbortError') {
        return null;
      }
      throw err;
    }
  }
}
