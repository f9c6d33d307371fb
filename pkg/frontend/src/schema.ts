/**
 * Runtime checks for every payload crossing the service boundary.
 *
 * Reads are checked so a drifted server build fails loudly instead of
 * rendering nonsense; the outgoing correction set is checked so we never
 * POST something the service would have to guess about.  Error messages
 * carry the JSON path of the offending value.
 */

import type {
  CorrectionPayload,
  CorrectionSetPayload,
  EdgePayload,
  HierarchyPayload,
  NodeDetailPayload,
  NodePayload,
  Outcome,
  ReviewSamplePayload,
  SamplesPayload,
  StatsPayload,
  SubmitReceipt,
} from "./types.js";
import { OUTCOMES } from "./types.js";

export class SchemaError extends Error {
  constructor(path: string, why: string) {
    super(`${path}: ${why}`);
    this.name = "SchemaError";
  }
}

function asObject(v: unknown, path: string): Record<string, unknown> {
  if (typeof v !== "object" || v === null || Array.isArray(v)) {
    throw new SchemaError(path, `expected an object, got ${describe(v)}`);
  }
  return v as Record<string, unknown>;
}

function asArray(v: unknown, path: string): unknown[] {
  if (!Array.isArray(v)) {
    throw new SchemaError(path, `expected an array, got ${describe(v)}`);
  }
  return v;
}

function asString(v: unknown, path: string): string {
  if (typeof v !== "string") {
    throw new SchemaError(path, `expected a string, got ${describe(v)}`);
  }
  return v;
}

function asNonEmptyString(v: unknown, path: string): string {
  const s = asString(v, path);
  if (s === "") throw new SchemaError(path, "must not be empty");
  return s;
}

function asNumber(v: unknown, path: string): number {
  if (typeof v !== "number" || Number.isNaN(v)) {
    throw new SchemaError(path, `expected a number, got ${describe(v)}`);
  }
  return v;
}

function asStringArray(v: unknown, path: string): string[] {
  return asArray(v, path).map((x, i) => asString(x, `${path}[${i}]`));
}

function describe(v: unknown): string {
  if (v === null) return "null";
  if (Array.isArray(v)) return "an array";
  return typeof v;
}

function checkAttributes(v: unknown, path: string): Record<string, string | number | boolean> {
  const obj = asObject(v, path);
  for (const [k, val] of Object.entries(obj)) {
    const t = typeof val;
    if (t !== "string" && t !== "number" && t !== "boolean") {
      throw new SchemaError(`${path}.${k}`, `attribute values must be scalar, got ${describe(val)}`);
    }
  }
  return obj as Record<string, string | number | boolean>;
}

export function checkNode(v: unknown, path = "node"): NodePayload {
  const obj = asObject(v, path);
  return {
    id: asNonEmptyString(obj.id, `${path}.id`),
    label: asNonEmptyString(obj.label, `${path}.label`),
    node_class: asNonEmptyString(obj.node_class, `${path}.node_class`),
    attributes: checkAttributes(obj.attributes ?? {}, `${path}.attributes`),
  };
}

export function checkEdge(v: unknown, path = "edge"): EdgePayload {
  const obj = asObject(v, path);
  return {
    parent: asNonEmptyString(obj.parent, `${path}.parent`),
    child: asNonEmptyString(obj.child, `${path}.child`),
    relation: asString(obj.relation, `${path}.relation`),
    provenance: asString(obj.provenance, `${path}.provenance`),
  };
}

export function checkHierarchyPayload(v: unknown): HierarchyPayload {
  const obj = asObject(v, "$");
  return {
    root: asNonEmptyString(obj.root, "$.root"),
    nodes: asArray(obj.nodes, "$.nodes").map((n, i) => checkNode(n, `$.nodes[${i}]`)),
    edges: asArray(obj.edges, "$.edges").map((e, i) => checkEdge(e, `$.edges[${i}]`)),
  };
}

export function checkNodeDetail(v: unknown): NodeDetailPayload {
  const obj = asObject(v, "$");
  const level = obj.level;
  if (level !== null && typeof level !== "number") {
    throw new SchemaError("$.level", `expected a number or null, got ${describe(level)}`);
  }
  return {
    ...checkNode(obj, "$"),
    parents: asStringArray(obj.parents, "$.parents"),
    children: asStringArray(obj.children, "$.children"),
    level: level as number | null,
  };
}

export function checkStats(v: unknown): StatsPayload {
  const obj = asObject(v, "$");
  const perLevel = asObject(obj.per_level_counts, "$.per_level_counts");
  const counts: Record<string, number> = {};
  for (const [k, val] of Object.entries(perLevel)) {
    counts[k] = asNumber(val, `$.per_level_counts.${k}`);
  }
  return {
    node_class: asString(obj.node_class, "$.node_class"),
    total_nodes: asNumber(obj.total_nodes, "$.total_nodes"),
    in_hierarchy_before: asNumber(obj.in_hierarchy_before, "$.in_hierarchy_before"),
    in_hierarchy_after: asNumber(obj.in_hierarchy_after, "$.in_hierarchy_after"),
    per_level_counts: counts,
    coverage_fraction: asNumber(obj.coverage_fraction, "$.coverage_fraction"),
    coverage_delta: asNumber(obj.coverage_delta, "$.coverage_delta"),
    hierarchy_node_count: asNumber(obj.hierarchy_node_count, "$.hierarchy_node_count"),
  };
}

function checkOutcome(v: unknown, path: string): Outcome {
  const s = asString(v, path);
  if (!(OUTCOMES as readonly string[]).includes(s)) {
    throw new SchemaError(path, `expected one of ${OUTCOMES.join(", ")}, got ${JSON.stringify(s)}`);
  }
  return s as Outcome;
}

export function checkReviewSample(v: unknown, path = "sample"): ReviewSamplePayload {
  const obj = asObject(v, path);
  const nodes = asStringArray(obj.nodes, `${path}.nodes`);
  const rawOutcomes = asObject(obj.outcomes ?? {}, `${path}.outcomes`);
  const outcomes: Record<string, Outcome> = {};
  for (const [node, outcome] of Object.entries(rawOutcomes)) {
    if (!nodes.includes(node)) {
      throw new SchemaError(`${path}.outcomes.${node}`, "outcome for a node outside the sample");
    }
    outcomes[node] = checkOutcome(outcome, `${path}.outcomes.${node}`);
  }
  return {
    subtree_root: asNonEmptyString(obj.subtree_root, `${path}.subtree_root`),
    nodes,
    assigned_reviewer: asString(obj.assigned_reviewer ?? "", `${path}.assigned_reviewer`),
    outcomes,
  };
}

export function checkSamples(v: unknown): SamplesPayload {
  const obj = asObject(v, "$");
  return {
    samples: asArray(obj.samples, "$.samples").map((s, i) => checkReviewSample(s, `$.samples[${i}]`)),
  };
}

export function checkCorrection(v: unknown, path = "correction"): CorrectionPayload {
  const obj = asObject(v, path);
  const remove = asStringArray(obj.remove_parents ?? [], `${path}.remove_parents`);
  const add = asStringArray(obj.add_parents ?? [], `${path}.add_parents`);
  const overlap = remove.filter((p) => add.includes(p));
  if (overlap.length > 0) {
    throw new SchemaError(path, `adds and removes the same parent: ${overlap.join(", ")}`);
  }
  if (remove.length === 0 && add.length === 0) {
    throw new SchemaError(path, "changes nothing (both parent lists empty)");
  }
  return {
    node: asNonEmptyString(obj.node, `${path}.node`),
    remove_parents: remove,
    add_parents: add,
    reviewer: asString(obj.reviewer ?? "", `${path}.reviewer`),
    timestamp: asString(obj.timestamp ?? "", `${path}.timestamp`),
  };
}

export function checkCorrectionSet(v: unknown): CorrectionSetPayload {
  const obj = asObject(v, "$");
  return {
    corrections: asArray(obj.corrections, "$.corrections").map((c, i) =>
      checkCorrection(c, `$.corrections[${i}]`),
    ),
  };
}

export function checkSubmitReceipt(v: unknown): SubmitReceipt {
  const obj = asObject(v, "$");
  const mode = asString(obj.mode, "$.mode");
  if (mode !== "staged" && mode !== "applied") {
    throw new SchemaError("$.mode", `expected "staged" or "applied", got ${JSON.stringify(mode)}`);
  }
  return {
    receipt: asNonEmptyString(obj.receipt, "$.receipt"),
    mode,
    accepted: asNumber(obj.accepted, "$.accepted"),
  };
}

export function checkFailedEntries(v: unknown): { node: string; reason: string }[] {
  const obj = asObject(v, "$");
  const detail = asObject(obj.detail, "$.detail");
  return asArray(detail.failed, "$.detail.failed").map((f, i) => {
    const entry = asObject(f, `$.detail.failed[${i}]`);
    return {
      node: asString(entry.node, `$.detail.failed[${i}].node`),
      reason: asString(entry.reason, `$.detail.failed[${i}].reason`),
    };
  });
}
