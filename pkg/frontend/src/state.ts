/**
 * Review session state: which branch is loaded, what is expanded, which
 * nodes the reviewer has marked, and which reparenting moves are pending.
 *
 * Moves and marks are kept per category so that pending entries always
 * reference nodes of the loaded subtree.  A move is stored as two parent
 * sets (remove, add); proposing the inverse of a pending change cancels it
 * instead of stacking a contradictory entry.
 */

import { checkCorrectionSet, checkReviewSample } from "./schema.js";
import { isDescendant, type TreeIndex } from "./tree.js";
import type {
  CorrectionSetPayload,
  FailedEntry,
  Outcome,
  ReviewSamplePayload,
} from "./types.js";

/** A proposal the UI refuses to queue, with the explanation to show. */
export class BlockedMove extends Error {
  constructor(message: string) {
    super(message);
    this.name = "BlockedMove";
  }
}

export interface MoveEntry {
  remove: Set<string>;
  add: Set<string>;
}

interface CategoryDraft {
  marks: Map<string, Outcome>;
  moves: Map<string, MoveEntry>;
}

export interface CategoryDraftData {
  marks: Record<string, Outcome>;
  moves: Record<string, { remove: string[]; add: string[] }>;
}

export interface DraftV1 {
  version: 1;
  reviewer: string;
  category: string | null;
  categories: Record<string, CategoryDraftData>;
}

function emptyDraft(): CategoryDraft {
  return { marks: new Map(), moves: new Map() };
}

export class ReviewSession {
  reviewer = "";
  category: string | null = null;
  index: TreeIndex | null = null;
  expanded = new Set<string>();
  /** node id -> rejection reason from the last 422, "" for batch-level errors */
  highlights = new Map<string, string>();
  lastReceipt: string | null = null;
  private drafts = new Map<string, CategoryDraft>();

  private active(): CategoryDraft {
    if (this.category === null) throw new Error("no category loaded");
    let draft = this.drafts.get(this.category);
    if (!draft) {
      draft = emptyDraft();
      this.drafts.set(this.category, draft);
    }
    return draft;
  }

  private requireIndex(): TreeIndex {
    if (!this.index) throw new Error("no category loaded");
    return this.index;
  }

  private requireLoaded(nodeId: string): void {
    if (!this.requireIndex().nodes.has(nodeId)) {
      throw new BlockedMove(`${nodeId} is not in the loaded branch`);
    }
  }

  get marks(): ReadonlyMap<string, Outcome> {
    return this.category === null ? new Map() : this.active().marks;
  }

  get moves(): ReadonlyMap<string, MoveEntry> {
    return this.category === null ? new Map() : this.active().moves;
  }

  /**
   * Switch to a freshly fetched branch.  Draft entries naming nodes that no
   * longer exist in it are dropped and reported so the view can say so.
   */
  loadCategory(index: TreeIndex): { droppedNodes: string[] } {
    this.category = index.root;
    this.index = index;
    this.expanded = new Set([index.root]);
    this.highlights.clear();
    const draft = this.active();
    const dropped: string[] = [];
    for (const node of [...draft.marks.keys()]) {
      if (!index.nodes.has(node)) {
        draft.marks.delete(node);
        dropped.push(node);
      }
    }
    for (const [node, entry] of [...draft.moves.entries()]) {
      const parentsKnown = [...entry.remove, ...entry.add].every((p) => index.nodes.has(p));
      if (!index.nodes.has(node) || !parentsKnown) {
        draft.moves.delete(node);
        if (!dropped.includes(node)) dropped.push(node);
      }
    }
    return { droppedNodes: dropped.sort() };
  }

  toggleExpanded(pathKey: string): void {
    if (this.expanded.has(pathKey)) this.expanded.delete(pathKey);
    else this.expanded.add(pathKey);
  }

  /**
   * Set or toggle a node's outcome.  Re-marking with the same outcome clears
   * it; any mark other than "misplaced" withdraws the node's pending move,
   * since a move proposal only makes sense for a misplaced node.
   */
  markOutcome(nodeId: string, outcome: Outcome): void {
    this.requireLoaded(nodeId);
    const draft = this.active();
    if (draft.marks.get(nodeId) === outcome) {
      draft.marks.delete(nodeId);
    } else {
      draft.marks.set(nodeId, outcome);
    }
    if (draft.marks.get(nodeId) !== "misplaced") {
      draft.moves.delete(nodeId);
    }
    this.highlights.delete(nodeId);
  }

  /**
   * Queue moving one placement of `nodeId` away from `fromParent` and under
   * `toParent`.  Blocks, with the reason, anything the loaded branch already
   * shows to be wrong: self-parenting, moves under the node's own
   * descendants (the server's cycle rule), duplicate parents, and parents
   * the node does not actually have.
   */
  proposeMove(nodeId: string, fromParent: string, toParent: string): void {
    const index = this.requireIndex();
    this.requireLoaded(nodeId);
    this.requireLoaded(toParent);
    if (toParent === nodeId) {
      throw new BlockedMove(`${nodeId} cannot be its own parent`);
    }
    if (isDescendant(index, toParent, nodeId)) {
      throw new BlockedMove(
        `moving ${nodeId} under ${toParent} would create a cycle: ` +
          `${toParent} is a descendant of ${nodeId}`,
      );
    }
    const draft = this.active();
    const entry = draft.moves.get(nodeId) ?? { remove: new Set<string>(), add: new Set<string>() };
    const currentParents = index.parents.get(nodeId)!;
    if (!entry.add.has(fromParent) && !currentParents.includes(fromParent)) {
      throw new BlockedMove(`${fromParent} is not a parent of ${nodeId}`);
    }
    if (!entry.remove.has(toParent) && currentParents.includes(toParent)) {
      throw new BlockedMove(`${toParent} is already a parent of ${nodeId}`);
    }
    // cancel-or-record, so proposing the inverse of a pending change undoes it
    if (entry.add.has(fromParent)) entry.add.delete(fromParent);
    else entry.remove.add(fromParent);
    if (entry.remove.has(toParent)) entry.remove.delete(toParent);
    else entry.add.add(toParent);
    if (entry.remove.size === 0 && entry.add.size === 0) {
      draft.moves.delete(nodeId);
    } else {
      draft.moves.set(nodeId, entry);
      draft.marks.set(nodeId, "misplaced");
    }
    this.highlights.delete(nodeId);
  }

  /** Drop a node's mark, pending move and highlight in one go. */
  discardNode(nodeId: string): void {
    if (this.category === null) return;
    const draft = this.active();
    draft.marks.delete(nodeId);
    draft.moves.delete(nodeId);
    this.highlights.delete(nodeId);
  }

  get pendingCount(): number {
    return this.moves.size;
  }

  /**
   * The pending moves as the exact JSON POST /corrections expects, checked
   * against the shared schema before anything leaves the client.
   */
  toCorrectionSet(timestamp: string): CorrectionSetPayload {
    const moves = this.moves;
    if (moves.size === 0) throw new Error("nothing to submit");
    const corrections = [...moves.entries()]
      .sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0))
      .map(([node, entry]) => ({
        node,
        remove_parents: [...entry.remove].sort(),
        add_parents: [...entry.add].sort(),
        reviewer: this.reviewer,
        timestamp,
      }));
    return checkCorrectionSet({ corrections });
  }

  /**
   * Outcome marks for the loaded branch in the review-sample file shape, so
   * the relevance tooling can consume them directly.
   */
  outcomesDocument(): ReviewSamplePayload {
    if (this.category === null) throw new Error("no category loaded");
    const marks = this.active().marks;
    const nodes = [...marks.keys()].sort();
    const outcomes: Record<string, Outcome> = {};
    for (const node of nodes) outcomes[node] = marks.get(node)!;
    return checkReviewSample({
      subtree_root: this.category,
      nodes,
      assigned_reviewer: this.reviewer,
      outcomes,
    });
  }

  /** A rejected batch stays pending in full; offenders get highlighted. */
  applyRejection(failed: FailedEntry[]): void {
    for (const f of failed) this.highlights.set(f.node, f.reason);
  }

  applySuccess(receipt: string): void {
    if (this.category !== null) this.drafts.set(this.category, emptyDraft());
    this.highlights.clear();
    this.lastReceipt = receipt;
  }

  toDraft(): DraftV1 {
    const categories: Record<string, CategoryDraftData> = {};
    for (const [cat, draft] of this.drafts) {
      if (draft.marks.size === 0 && draft.moves.size === 0) continue;
      const marks: Record<string, Outcome> = {};
      for (const [node, outcome] of draft.marks) marks[node] = outcome;
      const moves: CategoryDraftData["moves"] = {};
      for (const [node, entry] of draft.moves) {
        moves[node] = { remove: [...entry.remove].sort(), add: [...entry.add].sort() };
      }
      categories[cat] = { marks, moves };
    }
    return { version: 1, reviewer: this.reviewer, category: this.category, categories };
  }

  restoreDraft(draft: DraftV1): void {
    this.reviewer = draft.reviewer;
    this.drafts = new Map();
    for (const [cat, data] of Object.entries(draft.categories)) {
      const restored = emptyDraft();
      for (const [node, outcome] of Object.entries(data.marks)) {
        restored.marks.set(node, outcome);
      }
      for (const [node, move] of Object.entries(data.moves)) {
        restored.moves.set(node, { remove: new Set(move.remove), add: new Set(move.add) });
      }
      this.drafts.set(cat, restored);
    }
  }
}
