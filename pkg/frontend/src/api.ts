/**
 * Typed client for the survey service. The whole UI talks to the backend
 * through these four endpoints and nothing else:
 *
 *   GET  /api/survey?rater_id=R   blinded task manifest for one rater
 *   GET  /api/image/<hash>        stored PNG (used as <img src>)
 *   POST /api/ratings             {rater_id, product_id, method_slot, rating}
 *   GET  /api/report              aggregate report (completion matrix)
 *
 * Slots are opaque integers; which generation method sits behind a slot is
 * resolved server-side, so no request or manifest ever carries method names.
 */

export type Rating = 'low' | 'medium' | 'high';

export const RATINGS: readonly Rating[] = ['low', 'medium', 'high'];

export interface SurveyTask {
  product_id: string;
  product_name: string;
  image_hashes: string[];
}

export interface SurveyManifest {
  rater_id: string;
  tasks: SurveyTask[];
}

export interface RatingOutcome {
  stored: boolean;
  audit_count: number;
}

/** Per-product count of cells this rater has already rated (0..slots). */
export type ProgressMap = Map<string, number>;

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(message: string, readonly status: number) {
    super(message);
    this.name = 'ApiError';
  }
}

async function errorDetail(response: Response): Promise<string> {
  try {
    const body = await response.json();
    if (typeof body.detail === 'string') return body.detail;
    return JSON.stringify(body.detail ?? body);
  } catch {
    return response.statusText || `http ${response.status}`;
  }
}

export class SurveyApi {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike,
  ) {}

  async fetchManifest(raterId: string): Promise<SurveyManifest> {
    const url = `${this.baseUrl}/api/survey?rater_id=${encodeURIComponent(raterId)}`;
    const response = await this.fetchFn(url);
    if (!response.ok) {
      throw new ApiError(await errorDetail(response), response.status);
    }
    return (await response.json()) as SurveyManifest;
  }

  imageUrl(hash: string): string {
    return `${this.baseUrl}/api/image/${encodeURIComponent(hash)}`;
  }

  async submitRating(
    raterId: string,
    productId: string,
    methodSlot: number,
    rating: Rating,
  ): Promise<RatingOutcome> {
    const response = await this.fetchFn(`${this.baseUrl}/api/ratings`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({
        rater_id: raterId,
        product_id: productId,
        method_slot: methodSlot,
        rating,
      }),
    });
    if (!response.ok) {
      throw new ApiError(await errorDetail(response), response.status);
    }
    return (await response.json()) as RatingOutcome;
  }

  /**
   * How far this rater already got, from the server's completion matrix.
   *
   * The report's missing_cells rows name the generation methods, which must
   * never reach the task screens; only the per-product *counts* leave this
   * function. A rater absent from the report's id list has rated nothing; a
   * rater in the list with no missing rows for a product has rated all of it.
   */
  async fetchProgress(
    raterId: string,
    productIds: readonly string[],
    slotsPerTask: number,
  ): Promise<ProgressMap> {
    const response = await this.fetchFn(`${this.baseUrl}/api/report`);
    if (!response.ok) {
      throw new ApiError(await errorDetail(response), response.status);
    }
    const report = (await response.json()) as {
      raters: string[];
      missing_cells: { rater_id: string; product_id: string }[];
    };
    const progress: ProgressMap = new Map();
    if (!report.raters.includes(raterId)) {
      return progress; // brand-new rater: nothing rated anywhere
    }
    const missing = new Map<string, number>();
    for (const cell of report.missing_cells) {
      if (cell.rater_id === raterId) {
        missing.set(cell.product_id, (missing.get(cell.product_id) ?? 0) + 1);
      }
    }
    for (const productId of productIds) {
      progress.set(productId, slotsPerTask - (missing.get(productId) ?? 0));
    }
    return progress;
  }
}
