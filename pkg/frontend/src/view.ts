/**
 * DOM layer.  One mount point, re-rendered wholesale on every state change;
 * the tree region is windowed, so even a fully expanded ten-thousand-row
 * branch materializes only the rows near the viewport.
 *
 * Purely local interactions (expand, mark, arm a move) mutate the session
 * directly; anything that talks to the service goes through the hooks the
 * controller passes in.
 */

import { BlockedMove, type ReviewSession } from "./state.js";
import {
  flattenVisible,
  nodeIdOfPathKey,
  parentIdOfPathKey,
  type Row,
} from "./tree.js";
import { computeWindow } from "./virtual.js";

export interface ViewHooks {
  loadCategory(l1: string): void;
  submit(): void;
  exportOutcomes(): void;
  draftChanged(): void;
}

export interface ViewOptions {
  rowHeight: number;
  viewportHeight: number;
  overscan: number;
}

interface ArmedMove {
  nodeId: string;
  fromParent: string;
  pathKey: string;
}

const DEFAULTS: ViewOptions = { rowHeight: 24, viewportHeight: 480, overscan: 10 };

export class ReviewView {
  categories: string[] = [];
  private opts: ViewOptions;
  private bannerText = "";
  private bannerKind: "error" | "info" | "" = "";
  private armed: ArmedMove | null = null;
  private scrollTop = 0;
  private rendering = false;

  constructor(
    private doc: Document,
    private mount: HTMLElement,
    private session: ReviewSession,
    private hooks: ViewHooks,
    opts?: Partial<ViewOptions>,
  ) {
    this.opts = { ...DEFAULTS, ...opts };
  }

  banner(text: string, kind: "error" | "info" | "" = "error"): void {
    this.bannerText = text;
    this.bannerKind = kind;
    this.render();
  }

  clearBanner(): void {
    this.bannerText = "";
    this.bannerKind = "";
  }

  render(): void {
    this.rendering = true;
    try {
      this.mount.innerHTML = "";
      this.mount.appendChild(this.renderToolbar());
      this.mount.appendChild(this.renderBanner());
      this.mount.appendChild(this.renderTree());
      this.mount.appendChild(this.renderPending());
    } finally {
      this.rendering = false;
    }
  }

  private el(tag: string, className = "", text = ""): HTMLElement {
    const node = this.doc.createElement(tag);
    if (className) node.className = className;
    if (text) node.textContent = text;
    return node;
  }

  private renderToolbar(): HTMLElement {
    const bar = this.el("div", "toolbar");
    const select = this.doc.createElement("select");
    select.className = "category";
    const placeholder = this.doc.createElement("option");
    placeholder.value = "";
    placeholder.textContent = "choose a category";
    select.appendChild(placeholder);
    for (const cat of this.categories) {
      const option = this.doc.createElement("option");
      option.value = cat;
      option.textContent = cat;
      if (cat === this.session.category) option.selected = true;
      select.appendChild(option);
    }
    select.addEventListener("change", () => {
      if (select.value) this.hooks.loadCategory(select.value);
    });
    bar.appendChild(select);

    const reviewer = this.doc.createElement("input");
    reviewer.className = "reviewer";
    reviewer.placeholder = "reviewer";
    reviewer.value = this.session.reviewer;
    reviewer.addEventListener("input", () => {
      this.session.reviewer = reviewer.value;
      this.hooks.draftChanged();
    });
    bar.appendChild(reviewer);
    return bar;
  }

  private renderBanner(): HTMLElement {
    const banner = this.el("div", `banner ${this.bannerKind}`.trim(), this.bannerText);
    if (this.armed) {
      const hint = this.el(
        "span",
        "move-hint",
        ` moving ${this.armed.nodeId}: pick the new parent `,
      );
      const cancel = this.el("button", "cancel-move", "cancel");
      cancel.addEventListener("click", () => {
        this.armed = null;
        this.render();
      });
      hint.appendChild(cancel);
      banner.appendChild(hint);
    }
    return banner;
  }

  private renderTree(): HTMLElement {
    const session = this.session;
    if (!session.index) return this.el("div", "tree-empty", "no category loaded");
    const rows = flattenVisible(session.index, session.expanded);
    if (rows.length === 1 && !rows[0].hasChildren) {
      // just the bare L1 root: nothing has been attached here yet
      return this.el("div", "empty-state", `category ${session.index.root} is empty`);
    }
    const viewport = this.el("div", "tree-viewport");
    viewport.style.height = `${this.opts.viewportHeight}px`;
    viewport.style.overflow = "auto";
    const win = computeWindow(
      rows.length,
      this.opts.rowHeight,
      this.scrollTop,
      this.opts.viewportHeight,
      this.opts.overscan,
    );
    const top = this.el("div", "spacer-top");
    top.style.height = `${win.topPad}px`;
    viewport.appendChild(top);
    for (const row of rows.slice(win.start, win.end)) {
      viewport.appendChild(this.renderRow(row));
    }
    const bottom = this.el("div", "spacer-bottom");
    bottom.style.height = `${win.bottomPad}px`;
    viewport.appendChild(bottom);
    viewport.addEventListener("scroll", () => {
      if (this.rendering) return;
      this.scrollTop = viewport.scrollTop;
      this.render();
    });
    viewport.scrollTop = this.scrollTop;
    return viewport;
  }

  private renderRow(row: Row): HTMLElement {
    const session = this.session;
    const mark = session.marks.get(row.id);
    const classes = ["row"];
    if (mark) classes.push(`row-${mark}`);
    if (this.armed?.pathKey === row.pathKey) classes.push("move-source");
    const div = this.el("div", classes.join(" "));
    div.dataset.path = row.pathKey;
    div.dataset.id = row.id;
    div.style.paddingLeft = `${row.depth * 16}px`;
    div.style.height = `${this.opts.rowHeight}px`;

    const caret = this.el("span", "caret", row.hasChildren ? (row.expanded ? "▾" : "▸") : "·");
    if (row.hasChildren) {
      caret.addEventListener("click", () => {
        session.toggleExpanded(row.pathKey);
        this.render();
      });
    }
    div.appendChild(caret);
    div.appendChild(this.el("span", "label", row.label));
    if (row.placementCount > 1) {
      const badge = this.el("span", "badge", `⧉ ${row.placementCount}`);
      badge.title = `same node, ${row.placementCount} placements`;
      div.appendChild(badge);
    }

    const tools = this.el("span", "tools");
    for (const outcome of ["relevant", "misplaced", "unsure"] as const) {
      const btn = this.el(
        "button",
        `mark mark-${outcome}${mark === outcome ? " active" : ""}`,
        outcome[0].toUpperCase(),
      );
      btn.title = outcome;
      btn.addEventListener("click", () => {
        session.markOutcome(row.id, outcome);
        this.hooks.draftChanged();
        this.render();
      });
      tools.appendChild(btn);
    }
    const fromParent = parentIdOfPathKey(row.pathKey);
    if (this.armed && this.armed.pathKey !== row.pathKey) {
      const here = this.el("button", "move-target", "here");
      here.title = `make ${row.id} the new parent`;
      here.addEventListener("click", () => this.completeMove(row.id));
      tools.appendChild(here);
    } else if (fromParent !== null) {
      const move = this.el("button", "move", "move");
      move.title = "propose a new parent for this placement";
      move.addEventListener("click", () => {
        this.armed = { nodeId: row.id, fromParent, pathKey: row.pathKey };
        this.clearBanner();
        this.render();
      });
      tools.appendChild(move);
    }
    div.appendChild(tools);
    return div;
  }

  private completeMove(targetId: string): void {
    const armed = this.armed;
    if (!armed) return;
    try {
      this.session.proposeMove(armed.nodeId, armed.fromParent, targetId);
      this.armed = null;
      this.clearBanner();
      this.hooks.draftChanged();
    } catch (err) {
      if (err instanceof BlockedMove) {
        this.bannerText = err.message;
        this.bannerKind = "error";
      } else {
        throw err;
      }
    }
    this.render();
  }

  private renderPending(): HTMLElement {
    const session = this.session;
    const panel = this.el("div", "pending");
    panel.appendChild(this.el("h3", "", `pending corrections (${session.pendingCount})`));
    const list = this.el("ul", "pending-list");
    const sorted = [...session.moves.entries()].sort(([a], [b]) => (a < b ? -1 : 1));
    for (const [node, entry] of sorted) {
      const reason = session.highlights.get(node);
      const item = this.el("li", `pending-entry${reason ? " highlighted" : ""}`);
      item.dataset.node = node;
      const removed = [...entry.remove].sort().join(", ");
      const added = [...entry.add].sort().join(", ");
      const parts: string[] = [];
      if (removed) parts.push(`− ${removed}`);
      if (added) parts.push(`+ ${added}`);
      item.appendChild(this.el("span", "pending-text", `${node}: ${parts.join("  ")}`));
      if (reason) item.appendChild(this.el("span", "reason", reason));
      const discard = this.el("button", "discard", "✕");
      discard.addEventListener("click", () => {
        session.discardNode(node);
        this.hooks.draftChanged();
        this.render();
      });
      item.appendChild(discard);
      list.appendChild(item);
    }
    panel.appendChild(list);
    const batchReason = session.highlights.get("");
    if (batchReason) {
      panel.appendChild(this.el("div", "batch-error", batchReason));
    }
    const submit = this.el("button", "submit", "submit");
    (submit as HTMLButtonElement).disabled = session.pendingCount === 0;
    submit.addEventListener("click", () => this.hooks.submit());
    panel.appendChild(submit);
    const exportBtn = this.el("button", "export", "export outcomes");
    (exportBtn as HTMLButtonElement).disabled = session.marks.size === 0;
    exportBtn.addEventListener("click", () => this.hooks.exportOutcomes());
    panel.appendChild(exportBtn);
    if (session.lastReceipt) {
      panel.appendChild(this.el("span", "receipt", `receipt: ${session.lastReceipt}`));
    }
    return panel;
  }
}
