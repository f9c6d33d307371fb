/**
 * Draft persistence.  Pending marks and moves are written to browser
 * storage on every change and restored on boot, so an accidental reload or
 * a failed submit loses nothing.  Cleared only after the server accepts.
 */

import type { DraftV1 } from "./state.js";

const KEY = "hiergen-review-draft/v1";

/** The subset of the Storage interface we rely on; tests inject a stub. */
export interface KeyValueStore {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

export class DraftStore {
  constructor(private storage: KeyValueStore) {}

  load(): DraftV1 | null {
    const raw = this.storage.getItem(KEY);
    if (raw === null) return null;
    let parsed: unknown;
    try {
      parsed = JSON.parse(raw);
    } catch {
      return null; // an unreadable draft is treated as no draft
    }
    if (
      typeof parsed !== "object" ||
      parsed === null ||
      (parsed as { version?: unknown }).version !== 1
    ) {
      return null;
    }
    return parsed as DraftV1;
  }

  save(draft: DraftV1): void {
    this.storage.setItem(KEY, JSON.stringify(draft));
  }

  clear(): void {
    this.storage.removeItem(KEY);
  }
}
