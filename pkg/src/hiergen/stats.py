"""Coverage and per-level statistics, review sampling, outcome aggregation.

Level counting is whole-graph: every node reachable from a root is counted
once at its minimal level, whatever its class.  Coverage counts are scoped to
one node class, since a real KG threads several classes through the same
hierarchy.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum

from .errors import ClassMismatch, NoOutcomes
from .graph import Hierarchy, NodeId

DEFAULT_COLLAPSE_AT = 5


def _bucket(level: int, collapse_at: int) -> int | str:
    return level if level < collapse_at else f"{collapse_at}+"


def level_histogram(graph: Hierarchy, collapse_at: int = DEFAULT_COLLAPSE_AT) -> dict:
    """Node count per level, with levels >= ``collapse_at`` merged into one
    "N+" bucket.  Only nonzero buckets appear; values sum to the number of
    in-hierarchy nodes."""
    if collapse_at < 2:
        raise ValueError("collapse_at must be at least 2")
    counts: dict[int | str, int] = {}
    for node_id in graph.in_hierarchy_ids():
        level = graph.level_of(node_id)
        assert level is not None
        key = _bucket(level, collapse_at)
        counts[key] = counts.get(key, 0) + 1
    ordered = sorted(counts.items(), key=lambda kv: kv[0] if isinstance(kv[0], int) else collapse_at)
    return dict(ordered)


@dataclass(frozen=True)
class CoverageReport:
    """Before/after hierarchy coverage for one node class.

    ``per_level_counts`` spans the whole graph (all classes), so its values
    sum to ``hierarchy_node_count``; when the hierarchy holds only
    ``node_class`` nodes that total equals ``in_hierarchy_after``.
    """

    node_class: str
    total_nodes: int
    in_hierarchy_before: int
    in_hierarchy_after: int
    per_level_counts: dict
    coverage_fraction: float
    coverage_delta: float
    hierarchy_node_count: int

    def to_dict(self) -> dict:
        return {
            "node_class": self.node_class,
            "total_nodes": self.total_nodes,
            "in_hierarchy_before": self.in_hierarchy_before,
            "in_hierarchy_after": self.in_hierarchy_after,
            "per_level_counts": {str(k): v for k, v in self.per_level_counts.items()},
            "coverage_fraction": self.coverage_fraction,
            "coverage_delta": self.coverage_delta,
            "hierarchy_node_count": self.hierarchy_node_count,
        }


def coverage_report(
    before: Hierarchy,
    after: Hierarchy,
    node_class: str,
    collapse_at: int = DEFAULT_COLLAPSE_AT,
) -> CoverageReport:
    """Coverage gained for ``node_class`` between two graph states.

    Both graphs must hold the same node population for the class (coverage
    compares attachment, not membership); otherwise ClassMismatch.  The empty
    population yields all-zero counts with coverage 0 by convention.
    """
    before_ids = {n.id for n in before.nodes() if n.node_class == node_class}
    after_ids = {n.id for n in after.nodes() if n.node_class == node_class}
    if before_ids != after_ids:
        raise ClassMismatch(
            f"graphs disagree on the {node_class!r} node population "
            f"({len(before_ids)} vs {len(after_ids)} nodes)"
        )
    total = len(after_ids)
    in_before = len(before_ids & before.in_hierarchy_ids())
    in_h = after.in_hierarchy_ids()
    in_after = len(after_ids & in_h)
    return CoverageReport(
        node_class=node_class,
        total_nodes=total,
        in_hierarchy_before=in_before,
        in_hierarchy_after=in_after,
        per_level_counts=level_histogram(after, collapse_at),
        coverage_fraction=in_after / total if total else 0.0,
        coverage_delta=(in_after - in_before) / total if total else 0.0,
        hierarchy_node_count=len(in_h),
    )


# ---------------------------------------------------------------------------
# Review sampling and outcomes
# ---------------------------------------------------------------------------


class ReviewOutcome(str, Enum):
    RELEVANT = "relevant"
    MISPLACED = "misplaced"
    UNSURE = "unsure"


@dataclass
class ReviewSample:
    """Nodes selected from one L1 branch for human review."""

    subtree_root: NodeId
    nodes: list[NodeId]
    assigned_reviewer: str | None = None
    outcomes: dict[NodeId, ReviewOutcome] = field(default_factory=dict)

    def __post_init__(self) -> None:
        stray = set(self.outcomes) - set(self.nodes)
        if stray:
            raise ValueError(f"outcomes recorded for unsampled nodes: {sorted(stray)[:5]}")

    def to_dict(self) -> dict:
        return {
            "subtree_root": self.subtree_root,
            "nodes": list(self.nodes),
            "assigned_reviewer": self.assigned_reviewer,
            "outcomes": {k: v.value for k, v in self.outcomes.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> ReviewSample:
        return cls(
            subtree_root=d["subtree_root"],
            nodes=list(d["nodes"]),
            assigned_reviewer=d.get("assigned_reviewer"),
            outcomes={k: ReviewOutcome(v) for k, v in d.get("outcomes", {}).items()},
        )


def sample_for_review(
    graph: Hierarchy,
    rate: float,
    seed: int = 0,
    collapse_at: int = DEFAULT_COLLAPSE_AT,
) -> list[ReviewSample]:
    """Seeded level-stratified sample of in-hierarchy nodes, one ReviewSample
    per L1 category.

    Per level stratum, round(rate * stratum size) nodes are drawn.  Every L1
    category contributes at least one node (its root stands in when the draw
    misses the branch entirely).
    """
    if not 0.0 < rate <= 1.0:
        raise ValueError("rate must lie in (0, 1]")
    rng = random.Random(seed)
    strata: dict[int | str, list[NodeId]] = {}
    for node_id in sorted(graph.in_hierarchy_ids()):
        level = graph.level_of(node_id)
        assert level is not None
        strata.setdefault(_bucket(level, collapse_at), []).append(node_id)

    selected: set[NodeId] = set()
    for key in sorted(strata, key=lambda k: k if isinstance(k, int) else collapse_at):
        members = strata[key]
        k = int(rate * len(members) + 0.5)
        if k >= len(members):
            selected.update(members)
        elif k > 0:
            selected.update(rng.sample(members, k))

    # attribute each selected node to the first root that reaches it
    samples: list[ReviewSample] = []
    claimed: set[NodeId] = set()
    for root in graph.l1_roots:
        branch = graph.descendants(root) | {root}
        mine = sorted(n for n in selected & branch if n not in claimed)
        claimed.update(mine)
        if not mine:
            mine = [root]
        samples.append(ReviewSample(subtree_root=root, nodes=mine))
    return samples


def relevance_summary(samples: list[ReviewSample]) -> dict:
    """Aggregate review outcomes.

    relevant_fraction = relevant / (relevant + misplaced); unsure marks are
    excluded from the denominator and reported as unresolved.  When every
    recorded outcome is unsure the fraction is None.  Raises NoOutcomes when
    nothing was recorded at all.
    """
    total = {"relevant": 0, "misplaced": 0, "unsure": 0}
    by_category: dict[NodeId, dict] = {}
    for sample in samples:
        cat = by_category.setdefault(
            sample.subtree_root, {"relevant": 0, "misplaced": 0, "unsure": 0}
        )
        for outcome in sample.outcomes.values():
            total[outcome.value] += 1
            cat[outcome.value] += 1
    if sum(total.values()) == 0:
        raise NoOutcomes("no review outcomes recorded in any sample")

    def fraction(counts: dict) -> float | None:
        denominator = counts["relevant"] + counts["misplaced"]
        return counts["relevant"] / denominator if denominator else None

    for counts in by_category.values():
        counts["relevant_fraction"] = fraction(counts)
    return {
        "relevant_fraction": fraction(total),
        "relevant": total["relevant"],
        "misplaced": total["misplaced"],
        "unresolved": total["unsure"],
        "by_category": by_category,
    }
