import { beforeEach, describe, expect, it } from "vitest";

import { BlockedMove, ReviewSession } from "../src/state.js";
import { buildIndex } from "../src/tree.js";
import { celebrationsBranch, celebrationsMisplaced } from "./helpers/payloads.js";

const TS = "2026-08-23T00:00:00Z";

describe("outcome marks", () => {
  let session: ReviewSession;

  beforeEach(() => {
    session = new ReviewSession();
    session.loadCategory(buildIndex(celebrationsBranch()));
  });

  it("sets and replaces a mark", () => {
    session.markOutcome("love", "unsure");
    expect(session.marks.get("love")).toBe("unsure");
    session.markOutcome("love", "relevant");
    expect(session.marks.get("love")).toBe("relevant");
  });

  it("toggles off when re-marked with the same outcome", () => {
    session.markOutcome("love", "relevant");
    session.markOutcome("love", "relevant");
    expect(session.marks.has("love")).toBe(false);
  });

  it("refuses marks for nodes outside the branch", () => {
    expect(() => session.markOutcome("yoga", "relevant")).toThrowError(BlockedMove);
  });
});

describe("move proposals", () => {
  let session: ReviewSession;

  beforeEach(() => {
    session = new ReviewSession();
    session.reviewer = "reviewer-1";
    session.loadCategory(buildIndex(celebrationsMisplaced()));
  });

  it("produces the reparenting correction for the misplaced demo node", () => {
    session.markOutcome("mom-dad", "misplaced");
    session.proposeMove("mom-dad", "love", "marriage");
    expect(session.toCorrectionSet(TS)).toEqual({
      corrections: [
        {
          node: "mom-dad",
          remove_parents: ["love"],
          add_parents: ["marriage"],
          reviewer: "reviewer-1",
          timestamp: TS,
        },
      ],
    });
  });

  it("marks the node misplaced as a side effect", () => {
    session.proposeMove("mom-dad", "love", "marriage");
    expect(session.marks.get("mom-dad")).toBe("misplaced");
  });

  it("re-marking relevant withdraws the pending correction", () => {
    session.proposeMove("mom-dad", "love", "marriage");
    expect(session.pendingCount).toBe(1);
    session.markOutcome("mom-dad", "relevant");
    expect(session.pendingCount).toBe(0);
    expect(session.marks.get("mom-dad")).toBe("relevant");
  });

  it("blocks a move under the node's own descendant, with the reason", () => {
    expect(() => session.proposeMove("love", "Celebrations", "mom-dad")).toThrowError(
      /cycle.*mom-dad is a descendant of love/,
    );
    expect(session.pendingCount).toBe(0);
  });

  it("blocks self-parenting", () => {
    expect(() => session.proposeMove("love", "Celebrations", "love")).toThrowError(
      /cannot be its own parent/,
    );
  });

  it("blocks moves involving unknown nodes", () => {
    expect(() => session.proposeMove("yoga", "love", "marriage")).toThrowError(/not in the loaded/);
    expect(() => session.proposeMove("mom-dad", "love", "yoga")).toThrowError(/not in the loaded/);
  });

  it("blocks a move from a parent the node does not have", () => {
    expect(() => session.proposeMove("mom-dad", "birthday", "marriage")).toThrowError(
      /birthday is not a parent of mom-dad/,
    );
  });

  it("blocks a move under an existing parent", () => {
    expect(() => session.proposeMove("mom-dad", "love", "love")).toThrowError(/already a parent/);
  });

  it("cancels out when moved back", () => {
    session.proposeMove("mom-dad", "love", "marriage");
    session.proposeMove("mom-dad", "marriage", "love");
    expect(session.pendingCount).toBe(0);
  });

  it("merges successive placements of one node into one correction", () => {
    // anniversary-card sits under both the root and marriage
    session.proposeMove("anniversary-card", "Celebrations", "birthday");
    session.proposeMove("anniversary-card", "marriage", "valentines-day");
    const set = session.toCorrectionSet(TS);
    expect(set.corrections).toHaveLength(1);
    expect(set.corrections[0].remove_parents).toEqual(["Celebrations", "marriage"]);
    expect(set.corrections[0].add_parents).toEqual(["birthday", "valentines-day"]);
  });

  it("retargets a pending placement without touching real parents", () => {
    session.proposeMove("mom-dad", "love", "marriage");
    // second thoughts: birthday instead of marriage
    session.proposeMove("mom-dad", "marriage", "birthday");
    const set = session.toCorrectionSet(TS);
    expect(set.corrections[0].remove_parents).toEqual(["love"]);
    expect(set.corrections[0].add_parents).toEqual(["birthday"]);
  });

  it("sorts corrections by node id", () => {
    session.proposeMove("romantic-message", "marriage", "valentines-day");
    session.proposeMove("mom-dad", "love", "marriage");
    const nodes = session.toCorrectionSet(TS).corrections.map((c) => c.node);
    expect(nodes).toEqual(["mom-dad", "romantic-message"]);
  });

  it("refuses to build an empty submission", () => {
    expect(() => session.toCorrectionSet(TS)).toThrowError(/nothing to submit/);
  });
});

describe("server rejection and acceptance", () => {
  let session: ReviewSession;

  beforeEach(() => {
    session = new ReviewSession();
    session.loadCategory(buildIndex(celebrationsMisplaced()));
    session.proposeMove("mom-dad", "love", "marriage");
    session.proposeMove("romantic-message", "marriage", "birthday");
  });

  it("a rejection highlights offenders and retains the whole batch", () => {
    session.applyRejection([{ node: "romantic-message", reason: "would create a cycle" }]);
    expect(session.pendingCount).toBe(2);
    expect(session.highlights.get("romantic-message")).toContain("cycle");
    expect(session.highlights.has("mom-dad")).toBe(false);
  });

  it("editing a highlighted entry clears its highlight", () => {
    session.applyRejection([{ node: "romantic-message", reason: "nope" }]);
    session.proposeMove("romantic-message", "birthday", "valentines-day");
    expect(session.highlights.has("romantic-message")).toBe(false);
  });

  it("success clears pending state and remembers the receipt", () => {
    session.applySuccess("staged-0007");
    expect(session.pendingCount).toBe(0);
    expect(session.marks.size).toBe(0);
    expect(session.lastReceipt).toBe("staged-0007");
  });
});

describe("per-category drafts", () => {
  it("keeps pending work scoped to the branch it references", () => {
    const session = new ReviewSession();
    session.loadCategory(buildIndex(celebrationsMisplaced()));
    session.proposeMove("mom-dad", "love", "marriage");

    const other = buildIndex({
      root: "Health",
      nodes: [
        { id: "Health", label: "Health", node_class: "intent", attributes: {} },
        { id: "yoga", label: "yoga", node_class: "intent", attributes: {} },
      ],
      edges: [
        { parent: "Health", child: "yoga", relation: "narrower-than-parent", provenance: "preexisting" },
      ],
    });
    session.loadCategory(other);
    expect(session.pendingCount).toBe(0);
    session.markOutcome("yoga", "relevant");

    // switching back restores the celebrations draft untouched
    session.loadCategory(buildIndex(celebrationsMisplaced()));
    expect(session.pendingCount).toBe(1);
    expect(session.marks.get("mom-dad")).toBe("misplaced");
  });

  it("prunes draft entries naming nodes gone from the branch", () => {
    const session = new ReviewSession();
    session.loadCategory(buildIndex(celebrationsMisplaced()));
    session.proposeMove("mom-dad", "love", "marriage");
    session.markOutcome("valentines-day", "relevant");

    const shrunk = celebrationsMisplaced();
    shrunk.nodes = shrunk.nodes.filter((n) => n.id !== "valentines-day");
    shrunk.edges = shrunk.edges.filter(
      (e) => e.parent !== "valentines-day" && e.child !== "valentines-day",
    );
    const { droppedNodes } = session.loadCategory(buildIndex(shrunk));
    expect(droppedNodes).toEqual(["valentines-day"]);
    expect(session.pendingCount).toBe(1);
  });
});

describe("outcomes document", () => {
  it("exports marks in the review-sample shape", () => {
    const session = new ReviewSession();
    session.reviewer = "reviewer-9";
    session.loadCategory(buildIndex(celebrationsBranch()));
    session.markOutcome("love", "relevant");
    session.markOutcome("mom-dad", "misplaced");
    session.markOutcome("birthday", "unsure");
    expect(session.outcomesDocument()).toEqual({
      subtree_root: "Celebrations",
      nodes: ["birthday", "love", "mom-dad"],
      assigned_reviewer: "reviewer-9",
      outcomes: { birthday: "unsure", love: "relevant", "mom-dad": "misplaced" },
    });
  });
});
