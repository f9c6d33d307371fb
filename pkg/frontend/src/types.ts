/**
 * Payload contracts for the review service.
 *
 * These mirror the JSON the service emits and accepts, field for field.
 * Nothing here is invented client-side: if a shape changes on the server,
 * schema.ts rejects the payload instead of rendering a guess.
 */

export type Scalar = string | number | boolean;

export interface NodePayload {
  id: string;
  label: string;
  node_class: string;
  attributes: Record<string, Scalar>;
}

export interface EdgePayload {
  parent: string;
  child: string;
  relation: string;
  provenance: string;
}

/** GET /hierarchy/{l1} */
export interface HierarchyPayload {
  root: string;
  nodes: NodePayload[];
  edges: EdgePayload[];
}

/** GET /node/{id} */
export interface NodeDetailPayload extends NodePayload {
  parents: string[];
  children: string[];
  level: number | null;
}

/** GET /stats */
export interface StatsPayload {
  node_class: string;
  total_nodes: number;
  in_hierarchy_before: number;
  in_hierarchy_after: number;
  per_level_counts: Record<string, number>;
  coverage_fraction: number;
  coverage_delta: number;
  hierarchy_node_count: number;
}

export type Outcome = "relevant" | "misplaced" | "unsure";

export const OUTCOMES: readonly Outcome[] = ["relevant", "misplaced", "unsure"];

/** One entry of GET /samples; also the shape of the outcomes export. */
export interface ReviewSamplePayload {
  subtree_root: string;
  nodes: string[];
  assigned_reviewer: string;
  outcomes: Record<string, Outcome>;
}

export interface SamplesPayload {
  samples: ReviewSamplePayload[];
}

/** One reparenting proposal, as POST /corrections expects it. */
export interface CorrectionPayload {
  node: string;
  remove_parents: string[];
  add_parents: string[];
  reviewer: string;
  timestamp: string;
}

export interface CorrectionSetPayload {
  corrections: CorrectionPayload[];
}

/** 200 response of POST /corrections. */
export interface SubmitReceipt {
  receipt: string;
  mode: "staged" | "applied";
  accepted: number;
}

/** Entries of the 422 response detail of POST /corrections. */
export interface FailedEntry {
  node: string;
  reason: string;
}
