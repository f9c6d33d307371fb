/**
 * Branch model built from a /hierarchy payload.
 *
 * The service sends a flat node list plus parent->child edges; this module
 * turns that into something renderable.  A node with several parents is
 * shown once under each of them, so a row is identified by its full path
 * from the root, not by the node id alone.  Expansion state uses the same
 * path keys, which lets two copies of a diamond node expand independently.
 */

import type { HierarchyPayload, NodePayload } from "./types.js";

/** Separator for path keys; never part of a node id coming from our data. */
const SEP = "";

export class PayloadMismatch extends Error {
  constructor(message: string) {
    super(message);
    this.name = "PayloadMismatch";
  }
}

export interface TreeIndex {
  root: string;
  nodes: Map<string, NodePayload>;
  /** children per parent, sorted by label then id for a stable display order */
  children: Map<string, string[]>;
  parents: Map<string, string[]>;
}

export interface Row {
  /** root-to-node id path joined with a non-printing separator */
  pathKey: string;
  id: string;
  label: string;
  depth: number;
  hasChildren: boolean;
  expanded: boolean;
  /** number of parents this node has in the branch; > 1 marks a shared node */
  placementCount: number;
}

export function buildIndex(payload: HierarchyPayload): TreeIndex {
  const nodes = new Map<string, NodePayload>();
  for (const n of payload.nodes) {
    if (nodes.has(n.id)) throw new PayloadMismatch(`duplicate node id ${JSON.stringify(n.id)}`);
    nodes.set(n.id, n);
  }
  if (!nodes.has(payload.root)) {
    throw new PayloadMismatch(`root ${JSON.stringify(payload.root)} missing from node list`);
  }
  const children = new Map<string, string[]>();
  const parents = new Map<string, string[]>();
  for (const id of nodes.keys()) {
    children.set(id, []);
    parents.set(id, []);
  }
  const seen = new Set<string>();
  for (const e of payload.edges) {
    for (const end of [e.parent, e.child]) {
      if (!nodes.has(end)) {
        throw new PayloadMismatch(`edge references unknown node ${JSON.stringify(end)}`);
      }
    }
    const key = e.parent + SEP + e.child;
    if (seen.has(key)) continue;
    seen.add(key);
    children.get(e.parent)!.push(e.child);
    parents.get(e.child)!.push(e.parent);
  }
  const byLabel = (a: string, b: string) => {
    const la = nodes.get(a)!.label;
    const lb = nodes.get(b)!.label;
    return la < lb ? -1 : la > lb ? 1 : a < b ? -1 : a > b ? 1 : 0;
  };
  for (const list of children.values()) list.sort(byLabel);
  for (const list of parents.values()) list.sort(byLabel);
  assertAcyclic(children);
  return { root: payload.root, nodes, children, parents };
}

// Kahn's algorithm; a cyclic payload would make flattening run forever
function assertAcyclic(children: Map<string, string[]>): void {
  const indegree = new Map<string, number>();
  for (const id of children.keys()) indegree.set(id, 0);
  for (const kids of children.values()) {
    for (const c of kids) indegree.set(c, indegree.get(c)! + 1);
  }
  const queue: string[] = [];
  for (const [id, deg] of indegree) if (deg === 0) queue.push(id);
  let visited = 0;
  while (queue.length > 0) {
    const id = queue.pop()!;
    visited += 1;
    for (const c of children.get(id)!) {
      const deg = indegree.get(c)! - 1;
      indegree.set(c, deg);
      if (deg === 0) queue.push(c);
    }
  }
  if (visited !== children.size) {
    throw new PayloadMismatch("hierarchy payload contains a cycle");
  }
}

export function descendants(index: TreeIndex, id: string): Set<string> {
  const result = new Set<string>();
  const stack = [...(index.children.get(id) ?? [])];
  while (stack.length > 0) {
    const cur = stack.pop()!;
    if (result.has(cur)) continue;
    result.add(cur);
    stack.push(...index.children.get(cur)!);
  }
  return result;
}

export function isDescendant(index: TreeIndex, candidate: string, of: string): boolean {
  return descendants(index, of).has(candidate);
}

export function pathKeyOf(path: string[]): string {
  return path.join(SEP);
}

export function nodeIdOfPathKey(pathKey: string): string {
  const parts = pathKey.split(SEP);
  return parts[parts.length - 1];
}

/** Parent id of the row's placement, or null for the root row. */
export function parentIdOfPathKey(pathKey: string): string | null {
  const parts = pathKey.split(SEP);
  return parts.length > 1 ? parts[parts.length - 2] : null;
}

/**
 * Rows currently visible given the expansion set, in depth-first display
 * order.  Only expanded subtrees are walked, so the cost tracks what is on
 * screen plus the expanded frontier, not the branch size.
 */
export function flattenVisible(index: TreeIndex, expanded: ReadonlySet<string>): Row[] {
  const rows: Row[] = [];
  const walk = (id: string, path: string[], depth: number) => {
    const pathKey = pathKeyOf([...path, id]);
    const kids = index.children.get(id)!;
    const isExpanded = expanded.has(pathKey);
    rows.push({
      pathKey,
      id,
      label: index.nodes.get(id)!.label,
      depth,
      hasChildren: kids.length > 0,
      expanded: isExpanded,
      placementCount: Math.max(1, index.parents.get(id)!.length),
    });
    if (isExpanded) {
      for (const child of kids) walk(child, [...path, id], depth + 1);
    }
  };
  walk(index.root, [], 0);
  return rows;
}

/** Every pathKey in the branch, used by expand-all. */
export function allPathKeys(index: TreeIndex): Set<string> {
  const keys = new Set<string>();
  const walk = (id: string, path: string[]) => {
    const full = [...path, id];
    keys.add(pathKeyOf(full));
    for (const child of index.children.get(id)!) walk(child, full);
  };
  walk(index.root, []);
  return keys;
}
