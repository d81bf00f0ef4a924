/** Thin typed client over the annotation service's JSON API. */

import type { GoldRecord, PaperSummary, PaperView, SubmitResponse } from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

async function errorDetail(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { detail?: unknown };
    if (typeof body.detail === "string") {
      return body.detail;
    }
    return JSON.stringify(body.detail ?? body);
  } catch {
    return response.statusText || "request failed";
  }
}

export class ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.baseUrl + path, init);
    if (!response.ok) {
      throw new ApiError(response.status, await errorDetail(response));
    }
    return (await response.json()) as T;
  }

  listPapers(annotatorId: string): Promise<PaperSummary[]> {
    const query = new URLSearchParams({ annotator: annotatorId });
    return this.request<PaperSummary[]>(`/api/papers?${query}`);
  }

  getPaper(paperId: string, annotatorId: string): Promise<PaperView> {
    const query = new URLSearchParams({ annotator: annotatorId });
    return this.request<PaperView>(
      `/api/papers/${encodeURIComponent(paperId)}?${query}`,
    );
  }

  submitRanking(
    paperId: string,
    annotatorId: string,
    ranking: readonly string[],
  ): Promise<SubmitResponse> {
    return this.request<SubmitResponse>(
      `/api/papers/${encodeURIComponent(paperId)}/annotations`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ annotator_id: annotatorId, ranking: [...ranking] }),
      },
    );
  }

  skipPaper(paperId: string, annotatorId: string): Promise<SubmitResponse> {
    return this.request<SubmitResponse>(
      `/api/papers/${encodeURIComponent(paperId)}/skip`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ annotator_id: annotatorId }),
      },
    );
  }

  /** Latest-wins gold records, one JSON object per line. */
  async fetchExport(): Promise<GoldRecord[]> {
    const response = await fetch(this.baseUrl + "/api/export");
    if (!response.ok) {
      throw new ApiError(response.status, await errorDetail(response));
    }
    const text = await response.text();
    return text
      .split("\n")
      .filter((line) => line.trim().length > 0)
      .map((line) => JSON.parse(line) as GoldRecord);
  }
}
