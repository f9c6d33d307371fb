"""Applying generated deltas and human corrections to the KG, merging
new-domain subgraphs, and snapshot persistence.

Snapshots are canonical sorted-key JSON with a trailing checksum line, so
diffs are reviewable and truncation is detected.  A snapshot's provenance log
records every applied delta/correction batch; replaying the log from a base
snapshot reproduces the current graph byte-for-byte.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .errors import CorruptSnapshot, CycleRejected, StaleDelta, UnknownNode, UnsupportedVersion
from .generator import HierarchyDelta
from .graph import Edge, Hierarchy, Node, NodeId, Provenance

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1

_CHECKSUM_PREFIX = "checksum: sha256:"

#: Timestamp used when the caller supplies none (keeps outputs reproducible).
EPOCH = "1970-01-01T00:00:00Z"


# ---------------------------------------------------------------------------
# Corrections
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Correction:
    """One reviewer decision: reparent ``node`` by edge removal/addition."""

    node: NodeId
    remove_parents: frozenset[NodeId] = frozenset()
    add_parents: frozenset[NodeId] = frozenset()
    reviewer: str = ""
    timestamp: str = EPOCH

    def __post_init__(self) -> None:
        if self.add_parents & self.remove_parents:
            raise ValueError(f"correction for {self.node!r} adds and removes the same parent")

    def to_dict(self) -> dict:
        return {
            "node": self.node,
            "remove_parents": sorted(self.remove_parents),
            "add_parents": sorted(self.add_parents),
            "reviewer": self.reviewer,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, d: dict) -> Correction:
        return cls(
            node=d["node"],
            remove_parents=frozenset(d.get("remove_parents", [])),
            add_parents=frozenset(d.get("add_parents", [])),
            reviewer=d.get("reviewer", ""),
            timestamp=d.get("timestamp", EPOCH),
        )


@dataclass
class CorrectionSet:
    corrections: list[Correction] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"corrections": [c.to_dict() for c in self.corrections]}

    @classmethod
    def from_dict(cls, d: dict) -> CorrectionSet:
        if not isinstance(d, dict):
            raise TypeError(f"correction set must be a JSON object, got {type(d).__name__}")
        return cls(corrections=[Correction.from_dict(c) for c in d.get("corrections", [])])


@dataclass
class CorrectionReport:
    applied: list[NodeId] = field(default_factory=list)
    failed: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"applied": list(self.applied), "failed": list(self.failed)}


@dataclass
class MergeReport:
    unified: list[tuple[NodeId, NodeId]] = field(default_factory=list)
    inserted: list[NodeId] = field(default_factory=list)
    remapped: list[tuple[NodeId, NodeId]] = field(default_factory=list)
    edges_added: int = 0
    dropped_edges: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "unified": [list(p) for p in self.unified],
            "inserted": list(self.inserted),
            "remapped": [list(p) for p in self.remapped],
            "edges_added": self.edges_added,
            "dropped_edges": list(self.dropped_edges),
        }


# ---------------------------------------------------------------------------
# Delta and correction application
# ---------------------------------------------------------------------------


def hierarchy_checksum(graph: Hierarchy) -> str:
    """Content hash of the graph state (nodes, edges, roots); deltas pin the
    snapshot they were generated against with this value."""
    body = _canonical_body(graph, provenance_log=None)
    return hashlib.sha256(body.encode("utf-8")).hexdigest()


def apply_delta(graph: Hierarchy, delta: HierarchyDelta) -> Hierarchy:
    """All-or-nothing application of a delta's edges to a copy of ``graph``.

    Raises StaleDelta when the delta pins a different graph state,
    CycleRejected/UnknownNode when any edge is unsafe; the input graph is
    never mutated.
    """
    if delta.base_checksum is not None and delta.base_checksum != hierarchy_checksum(graph):
        raise StaleDelta(
            f"delta for {delta.l1_category!r} was generated against a different snapshot"
        )
    updated = graph.copy()
    for parent, child in delta.edges_added:
        updated.add_edge(parent, child, Provenance.GENERATED)
    return updated


def apply_corrections(
    graph: Hierarchy, corrections: CorrectionSet
) -> tuple[Hierarchy, CorrectionReport]:
    """Apply reviewer corrections, each one atomically.

    A correction that references unknown nodes or would close a cycle is
    rejected and reported; the remaining corrections still apply.  Added
    edges carry human-corrected provenance.
    """
    current = graph.copy()
    report = CorrectionReport()
    for correction in corrections.corrections:
        attempt = current.copy()
        try:
            attempt.node(correction.node)
            for parent in sorted(correction.remove_parents):
                attempt.remove_edge(parent, correction.node)
            for parent in sorted(correction.add_parents):
                attempt.add_edge(parent, correction.node, Provenance.HUMAN_CORRECTED)
        except (UnknownNode, CycleRejected) as exc:
            report.failed.append({"node": correction.node, "reason": str(exc)})
            continue
        current = attempt
        report.applied.append(correction.node)
    return current, report


def merge_subgraph(kg: Hierarchy, domain_subgraph: Hierarchy) -> tuple[Hierarchy, MergeReport]:
    """Merge a generated domain subgraph into the KG.

    Nodes matching on (node_class, normalized label) are unified — the KG
    node wins, subgraph-only attributes are appended.  Unmatched nodes are
    inserted (ids remapped when already taken).  Subgraph edges are rewritten
    to unified ids; edges that would close a cycle are dropped and reported.
    """
    merged = kg.copy()
    report = MergeReport()
    by_key: dict[tuple[str, str], NodeId] = {}
    for node in kg.nodes():
        by_key.setdefault((node.node_class, node.normalized_label), node.id)

    id_map: dict[NodeId, NodeId] = {}
    for node in domain_subgraph.nodes():
        match = by_key.get((node.node_class, node.normalized_label))
        if match is not None:
            id_map[node.id] = match
            report.unified.append((match, node.id))
            merged.merge_attributes(match, dict(node.attributes))
            continue
        new_id = node.id
        while new_id in merged:
            new_id = f"{new_id}+m"
        if new_id != node.id:
            report.remapped.append((node.id, new_id))
        id_map[node.id] = new_id
        merged.add_node(
            Node(id=new_id, label=node.label, node_class=node.node_class, attributes=dict(node.attributes))
        )
        by_key[(node.node_class, node.normalized_label)] = new_id
        report.inserted.append(new_id)

    for edge in domain_subgraph.edges():
        parent, child = id_map[edge.parent], id_map[edge.child]
        if merged.has_edge(parent, child):
            continue
        try:
            merged.add_edge(parent, child, edge.provenance)
        except CycleRejected as exc:
            report.dropped_edges.append({"parent": parent, "child": child, "reason": str(exc)})
            continue
        report.edges_added += 1

    new_roots = [id_map[r] for r in domain_subgraph.l1_roots if id_map[r] not in kg.l1_roots]
    if new_roots:
        merged.set_roots(list(merged.l1_roots) + new_roots)
    return merged, report


# ---------------------------------------------------------------------------
# Snapshots
# ---------------------------------------------------------------------------


@dataclass
class GraphSnapshot:
    """A persisted hierarchy plus the log of changes applied to it."""

    hierarchy: Hierarchy
    format_version: int = FORMAT_VERSION
    provenance_log: list[dict] = field(default_factory=list)

    def apply_delta(self, delta: HierarchyDelta, timestamp: str = EPOCH) -> None:
        self.hierarchy = apply_delta(self.hierarchy, delta)
        self.provenance_log.append(
            {"kind": "delta", "timestamp": timestamp, "payload": delta.to_dict()}
        )

    def apply_corrections(
        self, corrections: CorrectionSet, timestamp: str = EPOCH
    ) -> CorrectionReport:
        self.hierarchy, report = apply_corrections(self.hierarchy, corrections)
        self.provenance_log.append(
            {"kind": "corrections", "timestamp": timestamp, "payload": corrections.to_dict()}
        )
        return report

    def checksum(self) -> str:
        return hierarchy_checksum(self.hierarchy)


def replay_log(base: Hierarchy, provenance_log: Iterable[dict]) -> Hierarchy:
    """Re-apply a provenance log to a base graph."""
    current = base.copy()
    for entry in provenance_log:
        if entry["kind"] == "delta":
            current = apply_delta(current, HierarchyDelta.from_dict(entry["payload"]))
        elif entry["kind"] == "corrections":
            current, _ = apply_corrections(current, CorrectionSet.from_dict(entry["payload"]))
        else:
            raise ValueError(f"unknown provenance entry kind {entry['kind']!r}")
    return current


def _canonical_body(graph: Hierarchy, provenance_log: list[dict] | None) -> str:
    doc = {
        "format_version": FORMAT_VERSION,
        "class_filter": graph.class_filter,
        "node_classes": sorted(graph.node_classes),
        "l1_roots": list(graph.l1_roots),
        "nodes": [n.to_dict() for n in sorted(graph.nodes(), key=lambda n: n.id)],
        "edges": [e.to_dict() for e in sorted(graph.edges(), key=lambda e: e.key())],
    }
    if provenance_log is not None:
        doc["provenance_log"] = provenance_log
    return json.dumps(doc, sort_keys=True, ensure_ascii=True, indent=1)


def save_snapshot(snapshot: GraphSnapshot | Hierarchy) -> bytes:
    """Canonical serialization: sorted-key JSON plus a trailing checksum line."""
    if isinstance(snapshot, Hierarchy):
        snapshot = GraphSnapshot(hierarchy=snapshot)
    body = _canonical_body(snapshot.hierarchy, snapshot.provenance_log)
    digest = hashlib.sha256(body.encode("utf-8")).hexdigest()
    return f"{body}\n{_CHECKSUM_PREFIX}{digest}\n".encode("utf-8")


def load_snapshot(data: bytes) -> GraphSnapshot:
    """Parse and verify a snapshot produced by save_snapshot.

    Raises CorruptSnapshot on checksum mismatch or malformed content,
    UnsupportedVersion for format versions this build does not know.
    """
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise CorruptSnapshot(f"snapshot is not valid UTF-8: {exc}") from None
    lines = text.rstrip("\n").rsplit("\n", 1)
    if len(lines) != 2 or not lines[1].startswith(_CHECKSUM_PREFIX):
        raise CorruptSnapshot("snapshot is missing its checksum line")
    body, checksum_line = lines
    expected = checksum_line[len(_CHECKSUM_PREFIX) :].strip()
    actual = hashlib.sha256(body.encode("utf-8")).hexdigest()
    if actual != expected:
        raise CorruptSnapshot("snapshot checksum mismatch; file is corrupt or truncated")
    try:
        doc = json.loads(body)
    except json.JSONDecodeError as exc:
        raise CorruptSnapshot(f"snapshot body is not valid JSON: {exc}") from None
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise UnsupportedVersion(f"snapshot format_version {version!r} is not supported")
    try:
        nodes = [Node.from_dict(d) for d in doc["nodes"]]
        edges = [Edge.from_dict(d) for d in doc["edges"]]
        graph = Hierarchy.from_parts(
            nodes, edges, roots=doc["l1_roots"], class_filter=doc.get("class_filter", ""), check=False
        )
        graph.node_classes.update(doc.get("node_classes", []))
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptSnapshot(f"snapshot content malformed: {exc}") from None
    return GraphSnapshot(
        hierarchy=graph,
        format_version=version,
        provenance_log=list(doc.get("provenance_log", [])),
    )


def write_snapshot(snapshot: GraphSnapshot | Hierarchy, path: str | Path) -> None:
    Path(path).write_bytes(save_snapshot(snapshot))


def read_snapshot(path: str | Path) -> GraphSnapshot:
    return load_snapshot(Path(path).read_bytes())


# ---------------------------------------------------------------------------
# CSV import/export
# ---------------------------------------------------------------------------


def load_nodes_csv(path: str | Path) -> list[Node]:
    """Read nodes from CSV with columns id,label,class plus optional
    attribute columns; empty attribute cells are skipped."""
    nodes: list[Node] = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"id", "label", "class"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(f"{path}: CSV must have columns id,label,class")
        for row in reader:
            attributes = {
                k: v
                for k, v in row.items()
                if k not in required and v not in (None, "")
            }
            nodes.append(
                Node(id=row["id"], label=row["label"], node_class=row["class"], attributes=attributes)
            )
    return nodes


def dump_nodes_csv(nodes: Iterable[Node], path: str | Path) -> None:
    nodes = list(nodes)
    attr_keys = sorted({k for n in nodes for k in n.attributes})
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "label", "class", *attr_keys])
        for n in nodes:
            writer.writerow([n.id, n.label, n.node_class, *[n.attributes.get(k, "") for k in attr_keys]])
