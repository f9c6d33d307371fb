/**
 * Typed client for the review service.  Every response body is run through
 * the schema checks before anything downstream sees it, and the error
 * taxonomy distinguishes "service not there" from "service said no" so the
 * view can choose between a banner and row highlights.
 */

import {
  checkCorrectionSet,
  checkFailedEntries,
  checkHierarchyPayload,
  checkNodeDetail,
  checkSamples,
  checkStats,
  checkSubmitReceipt,
  SchemaError,
} from "./schema.js";
import { PayloadMismatch } from "./tree.js";
import type {
  CorrectionSetPayload,
  FailedEntry,
  HierarchyPayload,
  NodeDetailPayload,
  SamplesPayload,
  StatsPayload,
  SubmitReceipt,
} from "./types.js";

export class ServiceUnreachable extends Error {
  constructor(public url: string, cause: unknown) {
    super(`cannot reach the review service at ${url}`);
    this.name = "ServiceUnreachable";
    this.cause = cause;
  }
}

export class RequestFailed extends Error {
  constructor(public status: number, public detail: string) {
    super(`request failed with status ${status}: ${detail}`);
    this.name = "RequestFailed";
  }
}

/** 422 from POST /corrections: the batch stays pending, offenders listed. */
export class CorrectionsRejected extends Error {
  constructor(public failed: FailedEntry[]) {
    super(`server rejected ${failed.length} correction(s)`);
    this.name = "CorrectionsRejected";
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ServiceClient {
  private base: string;

  constructor(baseUrl: string, private fetchFn: FetchLike = (...a) => globalThis.fetch(...a)) {
    this.base = baseUrl.replace(/\/+$/, "");
  }

  async hierarchy(l1: string): Promise<HierarchyPayload> {
    return this.checked(await this.getJson(`/hierarchy/${encodeURIComponent(l1)}`), checkHierarchyPayload);
  }

  async node(id: string): Promise<NodeDetailPayload> {
    return this.checked(await this.getJson(`/node/${encodeURIComponent(id)}`), checkNodeDetail);
  }

  async stats(): Promise<StatsPayload> {
    return this.checked(await this.getJson("/stats"), checkStats);
  }

  async samples(rate?: number, seed?: number): Promise<SamplesPayload> {
    const params = new URLSearchParams();
    if (rate !== undefined) params.set("rate", String(rate));
    if (seed !== undefined) params.set("seed", String(seed));
    const query = params.size > 0 ? `/samples?${params}` : "/samples";
    return this.checked(await this.getJson(query), checkSamples);
  }

  /**
   * The category list for the picker.  The service has no dedicated roots
   * endpoint; sampling emits one subtree per L1 root, so the roots fall out
   * of a minimal-rate sample request.
   */
  async categories(): Promise<string[]> {
    const { samples } = await this.samples(0.001, 0);
    return [...new Set(samples.map((s) => s.subtree_root))].sort();
  }

  async submitCorrections(set: CorrectionSetPayload): Promise<SubmitReceipt> {
    checkCorrectionSet(set); // never POST what the schema would reject
    const url = `${this.base}/corrections`;
    let res: Response;
    try {
      res = await this.fetchFn(url, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(set),
      });
    } catch (err) {
      throw new ServiceUnreachable(url, err);
    }
    if (res.status === 422) {
      throw new CorrectionsRejected(checkFailedEntries(await this.parseJson(res, url)));
    }
    if (!res.ok) {
      throw new RequestFailed(res.status, await res.text().catch(() => ""));
    }
    return this.checked(await this.parseJson(res, url), checkSubmitReceipt);
  }

  private async getJson(path: string): Promise<unknown> {
    const url = `${this.base}${path}`;
    let res: Response;
    try {
      res = await this.fetchFn(url);
    } catch (err) {
      throw new ServiceUnreachable(url, err);
    }
    if (!res.ok) {
      throw new RequestFailed(res.status, await res.text().catch(() => ""));
    }
    return this.parseJson(res, url);
  }

  private async parseJson(res: Response, url: string): Promise<unknown> {
    try {
      return await res.json();
    } catch {
      throw new PayloadMismatch(`${url} did not return JSON`);
    }
  }

  private checked<T>(body: unknown, check: (v: unknown) => T): T {
    try {
      return check(body);
    } catch (err) {
      if (err instanceof SchemaError) {
        throw new PayloadMismatch(`service payload mismatch at ${err.message}`);
      }
      throw err;
    }
  }
}
