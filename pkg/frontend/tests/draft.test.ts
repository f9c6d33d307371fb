import { describe, expect, it } from "vitest";

import { DraftStore, type KeyValueStore } from "../src/draft.js";
import { ReviewSession } from "../src/state.js";
import { buildIndex } from "../src/tree.js";
import { celebrationsMisplaced } from "./helpers/payloads.js";

/** In-memory localStorage stand-in. */
function memoryStorage(): KeyValueStore & { dump(): Map<string, string> } {
  const data = new Map<string, string>();
  return {
    getItem: (k) => data.get(k) ?? null,
    setItem: (k, v) => void data.set(k, v),
    removeItem: (k) => void data.delete(k),
    dump: () => data,
  };
}

describe("draft persistence", () => {
  it("survives a reload with pending work intact", () => {
    const storage = memoryStorage();
    const store = new DraftStore(storage);

    const session = new ReviewSession();
    session.reviewer = "reviewer-1";
    session.loadCategory(buildIndex(celebrationsMisplaced()));
    session.proposeMove("mom-dad", "love", "marriage");
    session.markOutcome("birthday", "relevant");
    store.save(session.toDraft());

    // "reload": a new session restored from the same storage
    const revived = new ReviewSession();
    const saved = new DraftStore(storage).load();
    expect(saved).not.toBeNull();
    revived.restoreDraft(saved!);
    revived.loadCategory(buildIndex(celebrationsMisplaced()));
    expect(revived.reviewer).toBe("reviewer-1");
    expect(revived.pendingCount).toBe(1);
    expect(revived.marks.get("birthday")).toBe("relevant");
    expect(revived.toCorrectionSet("t").corrections[0]).toMatchObject({
      node: "mom-dad",
      remove_parents: ["love"],
      add_parents: ["marriage"],
    });
  });

  it("returns no draft for an empty store", () => {
    expect(new DraftStore(memoryStorage()).load()).toBeNull();
  });

  it("treats unreadable or foreign payloads as no draft", () => {
    const storage = memoryStorage();
    storage.setItem("hiergen-review-draft/v1", "{not json");
    expect(new DraftStore(storage).load()).toBeNull();
    storage.setItem("hiergen-review-draft/v1", JSON.stringify({ version: 99 }));
    expect(new DraftStore(storage).load()).toBeNull();
  });

  it("clears on demand", () => {
    const storage = memoryStorage();
    const store = new DraftStore(storage);
    const session = new ReviewSession();
    session.loadCategory(buildIndex(celebrationsMisplaced()));
    session.proposeMove("mom-dad", "love", "marriage");
    store.save(session.toDraft());
    expect(store.load()).not.toBeNull();
    store.clear();
    expect(store.load()).toBeNull();
    expect(storage.dump().size).toBe(0);
  });

  it("drops categories with nothing pending from the stored draft", () => {
    const session = new ReviewSession();
    session.loadCategory(buildIndex(celebrationsMisplaced()));
    session.proposeMove("mom-dad", "love", "marriage");
    session.applySuccess("staged-0001");
    const draft = session.toDraft();
    expect(draft.categories).toEqual({});
  });
});
