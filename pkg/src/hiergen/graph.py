"""Knowledge-graph data model: typed nodes, a multi-parent DAG of hierarchy
edges rooted at L1 category nodes, level computation, traversal, validation.

Levels are defined by shortest path: an L1 root is level 1, every other
in-hierarchy node is 1 + the minimum distance from the nearest root.  A node
that no root reaches is "not in hierarchy" and has no level.

Concurrency: a Hierarchy is single-writer / multi-reader.  Mutations require
exclusive access; reads (level_of, descendants, subgraph, validate) are safe to
run concurrently against a snapshot obtained with ``copy()``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator

from .errors import CycleRejected, DuplicateIdConflict, UnknownNode

NodeId = str

#: Scalar attribute values allowed on a node.
Scalar = str | int | float | bool

#: The single relation kind hierarchy edges carry.
RELATION = "narrower-than-parent"


class Provenance(str, Enum):
    """Where a hierarchy edge came from."""

    PREEXISTING = "preexisting"
    GENERATED = "generated"
    HUMAN_CORRECTED = "human-corrected"


def normalize_label(label: str) -> str:
    """Lowercase, trim and collapse internal whitespace.

    Used only for dedup during merge; display labels are never mutated.
    """
    return " ".join(label.split()).lower()


@dataclass(frozen=True)
class Node:
    """A labeled KG entity with a class (e.g. "intent", "color")."""

    id: NodeId
    label: str
    node_class: str
    attributes: dict[str, Scalar] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("node id must be non-empty")
        if not self.label:
            raise ValueError(f"node {self.id!r} has an empty label")
        if not self.node_class:
            raise ValueError(f"node {self.id!r} has an empty node_class")

    @property
    def normalized_label(self) -> str:
        return normalize_label(self.label)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "label": self.label,
            "node_class": self.node_class,
            "attributes": dict(self.attributes),
        }

    @classmethod
    def from_dict(cls, d: dict) -> Node:
        return cls(
            id=d["id"],
            label=d["label"],
            node_class=d["node_class"],
            attributes=dict(d.get("attributes", {})),
        )


@dataclass(frozen=True)
class Edge:
    """A directed parent -> child hierarchy edge."""

    parent: NodeId
    child: NodeId
    provenance: Provenance = Provenance.GENERATED
    relation: str = RELATION

    def key(self) -> tuple[NodeId, NodeId]:
        return (self.parent, self.child)

    def to_dict(self) -> dict:
        return {
            "parent": self.parent,
            "child": self.child,
            "relation": self.relation,
            "provenance": self.provenance.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> Edge:
        return cls(
            parent=d["parent"],
            child=d["child"],
            provenance=Provenance(d.get("provenance", "generated")),
            relation=d.get("relation", RELATION),
        )


@dataclass(frozen=True)
class Violation:
    """One failed hierarchy invariant, naming the offending node ids."""

    code: str
    message: str
    nodes: tuple[NodeId, ...] = ()


class Hierarchy:
    """A multi-parent DAG of typed nodes rooted at L1 category nodes.

    ``class_filter`` names the node class this hierarchy organizes; the graph
    may still hold nodes of other registered classes (real KGs mix classes
    inside one hierarchy).
    """

    def __init__(self, class_filter: str = "", node_classes: Iterable[str] = ()):
        self.class_filter = class_filter
        self.node_classes: set[str] = set(node_classes)
        self._nodes: dict[NodeId, Node] = {}
        self._edges: dict[tuple[NodeId, NodeId], Edge] = {}
        self._children: dict[NodeId, set[NodeId]] = {}
        self._parents: dict[NodeId, set[NodeId]] = {}
        self.l1_roots: list[NodeId] = []
        self._version = 0
        self._level_cache: tuple[int, dict[NodeId, int]] | None = None

    # -- construction / mutation --------------------------------------------

    def add_node(self, node: Node) -> None:
        """Add a node; identical re-adds are idempotent.

        Raises DuplicateIdConflict if the id exists with a different payload.
        """
        existing = self._nodes.get(node.id)
        if existing is not None:
            if existing != node:
                raise DuplicateIdConflict(
                    f"node id {node.id!r} already exists with a different payload"
                )
            return
        self._nodes[node.id] = node
        self._children[node.id] = set()
        self._parents[node.id] = set()
        self.node_classes.add(node.node_class)
        self._bump()

    def add_edge(
        self,
        parent: NodeId,
        child: NodeId,
        provenance: Provenance = Provenance.GENERATED,
    ) -> None:
        """Add a parent -> child edge, preserving acyclicity.

        Duplicate edges are idempotent (the original provenance wins).  Raises
        CycleRejected before touching the graph if the edge would close a
        directed cycle, UnknownNode if either endpoint is missing.
        """
        if parent not in self._nodes:
            raise UnknownNode(f"unknown parent node {parent!r}")
        if child not in self._nodes:
            raise UnknownNode(f"unknown child node {child!r}")
        if parent == child:
            raise CycleRejected(parent, child, f"self-loop on {parent!r}")
        if (parent, child) in self._edges:
            return
        if self._reaches(child, parent):
            raise CycleRejected(parent, child)
        self._edges[(parent, child)] = Edge(parent, child, provenance)
        self._children[parent].add(child)
        self._parents[child].add(parent)
        self._bump()

    def merge_attributes(self, node_id: NodeId, extra: dict[str, Scalar]) -> None:
        """Append attributes not already present; existing values win."""
        current = self.node(node_id)
        added = {k: v for k, v in extra.items() if k not in current.attributes}
        if not added:
            return
        self._nodes[node_id] = Node(
            id=current.id,
            label=current.label,
            node_class=current.node_class,
            attributes={**current.attributes, **added},
        )
        self._bump()

    def remove_edge(self, parent: NodeId, child: NodeId) -> bool:
        """Remove an edge if present; returns whether one was removed."""
        if (parent, child) not in self._edges:
            return False
        del self._edges[(parent, child)]
        self._children[parent].discard(child)
        self._parents[child].discard(parent)
        self._bump()
        return True

    def set_roots(self, roots: Iterable[NodeId]) -> None:
        """Declare the ordered set of L1 roots (each must be a known node)."""
        seen: list[NodeId] = []
        for r in roots:
            if r not in self._nodes:
                raise UnknownNode(f"unknown root node {r!r}")
            if r not in seen:
                seen.append(r)
        self.l1_roots = seen
        self._bump()

    @classmethod
    def from_parts(
        cls,
        nodes: Iterable[Node],
        edges: Iterable[Edge],
        roots: Iterable[NodeId],
        class_filter: str = "",
        check: bool = True,
    ) -> Hierarchy:
        """Bulk constructor; with ``check=False`` edges bypass the per-edge
        cycle test (used by loaders and fixture builders that already hold a
        level-ordered edge list, and by tests that force-load bad graphs).
        """
        g = cls(class_filter=class_filter)
        for n in nodes:
            g.add_node(n)
        if check:
            for e in edges:
                g.add_edge(e.parent, e.child, e.provenance)
        else:
            for e in edges:
                for end in (e.parent, e.child):
                    if end not in g._nodes:
                        raise UnknownNode(f"edge endpoint {end!r} not in node set")
                g._edges[e.key()] = e
                g._children[e.parent].add(e.child)
                g._parents[e.child].add(e.parent)
        g.set_roots(roots)
        return g

    def copy(self) -> Hierarchy:
        """Independent snapshot; safe to hand to concurrent readers."""
        g = Hierarchy(class_filter=self.class_filter, node_classes=self.node_classes)
        g._nodes = dict(self._nodes)
        g._edges = dict(self._edges)
        g._children = {k: set(v) for k, v in self._children.items()}
        g._parents = {k: set(v) for k, v in self._parents.items()}
        g.l1_roots = list(self.l1_roots)
        return g

    def _bump(self) -> None:
        self._version += 1

    # -- basic access --------------------------------------------------------

    def __contains__(self, node_id: NodeId) -> bool:
        return node_id in self._nodes

    def __len__(self) -> int:
        return len(self._nodes)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Hierarchy):
            return NotImplemented
        return (
            self._nodes == other._nodes
            and self._edges == other._edges
            and self.l1_roots == other.l1_roots
            and self.class_filter == other.class_filter
        )

    def node(self, node_id: NodeId) -> Node:
        try:
            return self._nodes[node_id]
        except KeyError:
            raise UnknownNode(f"unknown node {node_id!r}") from None

    def find_by_label(self, label: str, node_class: str | None = None) -> list[Node]:
        """Nodes whose normalized label matches ``label`` (optionally by class)."""
        want = normalize_label(label)
        return [
            n
            for n in self._nodes.values()
            if n.normalized_label == want
            and (node_class is None or n.node_class == node_class)
        ]

    def nodes(self) -> Iterator[Node]:
        return iter(self._nodes.values())

    def node_ids(self) -> Iterator[NodeId]:
        return iter(self._nodes)

    def edges(self) -> Iterator[Edge]:
        return iter(self._edges.values())

    def edge_keys(self) -> set[tuple[NodeId, NodeId]]:
        return set(self._edges)

    def num_edges(self) -> int:
        return len(self._edges)

    def has_edge(self, parent: NodeId, child: NodeId) -> bool:
        return (parent, child) in self._edges

    def has_node(self, node_id: NodeId) -> bool:
        return node_id in self._nodes

    def parents_of(self, node_id: NodeId) -> set[NodeId]:
        self.node(node_id)
        return set(self._parents[node_id])

    def children_of(self, node_id: NodeId) -> set[NodeId]:
        self.node(node_id)
        return set(self._children[node_id])

    # -- levels and traversal ------------------------------------------------

    def _levels(self) -> dict[NodeId, int]:
        """Level per in-hierarchy node, via multi-source BFS from the roots."""
        if self._level_cache is not None and self._level_cache[0] == self._version:
            return self._level_cache[1]
        levels: dict[NodeId, int] = {}
        queue: deque[NodeId] = deque()
        for r in self.l1_roots:
            levels[r] = 1
            queue.append(r)
        while queue:
            current = queue.popleft()
            next_level = levels[current] + 1
            for child in self._children[current]:
                if child not in levels:
                    levels[child] = next_level
                    queue.append(child)
        self._level_cache = (self._version, levels)
        return levels

    def level_of(self, node_id: NodeId) -> int | None:
        """Level of a node, or None when no root reaches it.

        Raises UnknownNode for ids not in the graph at all.
        """
        self.node(node_id)
        return self._levels().get(node_id)

    def in_hierarchy_ids(self) -> set[NodeId]:
        """Ids reachable from at least one L1 root (roots included)."""
        return set(self._levels())

    def descendants(self, node_id: NodeId) -> set[NodeId]:
        """All nodes reachable via child edges, excluding the node itself.

        Visits each node once, so diamond shapes terminate.
        """
        self.node(node_id)
        seen: set[NodeId] = set()
        queue: deque[NodeId] = deque([node_id])
        while queue:
            current = queue.popleft()
            for child in self._children[current]:
                if child not in seen:
                    seen.add(child)
                    queue.append(child)
        seen.discard(node_id)
        return seen

    def ancestors(self, node_id: NodeId) -> set[NodeId]:
        """All nodes that reach this node via child edges."""
        self.node(node_id)
        seen: set[NodeId] = set()
        queue: deque[NodeId] = deque([node_id])
        while queue:
            current = queue.popleft()
            for parent in self._parents[current]:
                if parent not in seen:
                    seen.add(parent)
                    queue.append(parent)
        seen.discard(node_id)
        return seen

    def subgraph(self, root: NodeId) -> Hierarchy:
        """Induced hierarchy over {root} plus its descendants, with root as
        the sole L1 root."""
        self.node(root)
        keep = self.descendants(root) | {root}
        g = Hierarchy(class_filter=self.class_filter, node_classes=self.node_classes)
        for nid in keep:
            g.add_node(self._nodes[nid])
        for (p, c), edge in self._edges.items():
            if p in keep and c in keep:
                g._edges[(p, c)] = edge
                g._children[p].add(c)
                g._parents[c].add(p)
        g._bump()
        g.set_roots([root])
        return g

    def _reaches(self, start: NodeId, target: NodeId) -> bool:
        """Whether ``target`` is reachable from ``start`` via child edges."""
        if start == target:
            return True
        queue: deque[NodeId] = deque([start])
        seen = {start}
        while queue:
            current = queue.popleft()
            for child in self._children[current]:
                if child == target:
                    return True
                if child not in seen:
                    seen.add(child)
                    queue.append(child)
        return False

    # -- validation ----------------------------------------------------------

    def find_cycle(self) -> list[NodeId] | None:
        """Some directed cycle as a node list, or None when acyclic."""
        indegree = {nid: len(self._parents[nid]) for nid in self._nodes}
        queue = deque(nid for nid, d in indegree.items() if d == 0)
        visited = 0
        while queue:
            current = queue.popleft()
            visited += 1
            for child in self._children[current]:
                indegree[child] -= 1
                if indegree[child] == 0:
                    queue.append(child)
        if visited == len(self._nodes):
            return None
        # Every leftover node kept indegree > 0, i.e. has a leftover parent,
        # so walking parents must eventually revisit a node: that's a cycle.
        leftover = {nid for nid, d in indegree.items() if d > 0}
        start = next(iter(leftover))
        path: list[NodeId] = []
        seen_at: dict[NodeId, int] = {}
        current = start
        while current not in seen_at:
            seen_at[current] = len(path)
            path.append(current)
            current = next(p for p in self._parents[current] if p in leftover)
        cycle = path[seen_at[current]:]
        cycle.reverse()
        return cycle

    def validate(self) -> list[Violation]:
        """Report every violated hierarchy invariant; empty means well-formed."""
        violations: list[Violation] = []
        cycle = self.find_cycle()
        if cycle is not None:
            violations.append(
                Violation(
                    code="cycle",
                    message="edge set contains a directed cycle",
                    nodes=tuple(cycle),
                )
            )
        for root in self.l1_roots:
            if root not in self._nodes:
                violations.append(
                    Violation("unknown-root", f"root {root!r} is not a node", (root,))
                )
            elif self._parents[root]:
                violations.append(
                    Violation(
                        code="root-has-parent",
                        message=f"L1 root {root!r} has incoming edges",
                        nodes=(root, *sorted(self._parents[root])),
                    )
                )
        for (p, c) in self._edges:
            missing = [x for x in (p, c) if x not in self._nodes]
            if missing:
                violations.append(
                    Violation(
                        code="dangling-edge",
                        message=f"edge {p!r} -> {c!r} references unknown nodes",
                        nodes=tuple(missing),
                    )
                )
        for node in self._nodes.values():
            if self.node_classes and node.node_class not in self.node_classes:
                violations.append(
                    Violation(
                        code="unregistered-class",
                        message=f"node {node.id!r} has unregistered class {node.node_class!r}",
                        nodes=(node.id,),
                    )
                )
        return violations
