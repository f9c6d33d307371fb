"""Hierarchy generation: placing classified candidate nodes under an L1
category branch.

Two strategies:

- one_shot: every candidate is presented against the rendered branch in a
  single pass (batched when large, with exactly one overall correction pass);
- cyclical: one level at a time — membership classification with the branch's
  current children as worked examples, deferral of deeper nodes, a placement
  pass, then recursion into each child subtree.

Membership prompts are binary keep/defer per node and a node is deferred
unless affirmatively kept, countering the tendency of models to avoid the
fallback category.  One-shot batches are sorted longest-label-first by
default so compound labels are seen before their prefixes.

Both strategies uphold the same safety rules: never add a parent to an L1
root, never emit an edge that would close a cycle or reference an unknown
node, and account for every candidate as either placed or unplaced.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from .graph import Hierarchy, NodeId
from .prompts import SYSTEM_TAXONOMIST, json_list, render_branch, render_template
from .provider import (
    CompletionProviderBase,
    PromptRequest,
    complete_and_parse,
    estimate_tokens,
    parse_classification,
    parse_hierarchy,
    parse_review_findings,
)

logger = logging.getLogger(__name__)

DEFAULT_BATCH_SIZE = 40
DEFAULT_MAX_DEPTH = 6
DEFAULT_MAX_OUTPUT_TOKENS = 4096

KEEP = "keep"
DEFER = "defer"
OTHER = "Other"


class Strategy(str, Enum):
    ONE_SHOT = "one_shot"
    CYCLICAL = "cyclical"


class FindingKind(str, Enum):
    WRONG_PARENT = "wrong_parent"
    SIBLING_CONFUSION = "sibling_confusion"
    LEVEL_MISPLACEMENT = "level_misplacement"


@dataclass(frozen=True)
class CandidateSet:
    """Candidates the classifier assigned to one L1 category."""

    l1_category: NodeId
    candidates: frozenset[NodeId]


@dataclass
class HierarchyDelta:
    """Proposed new edges for one category, with full accounting.

    Every candidate is either a child in ``edges_added`` or in ``unplaced``;
    ``rejected_labels`` lists hallucinated labels the provider emitted.
    ``passes`` counts provider calls.  ``base_checksum``, when set, pins the
    snapshot the delta was generated against.
    """

    l1_category: NodeId
    edges_added: list[tuple[NodeId, NodeId]] = field(default_factory=list)
    unplaced: set[NodeId] = field(default_factory=set)
    rejected_labels: list[str] = field(default_factory=list)
    strategy_used: Strategy = Strategy.ONE_SHOT
    passes: int = 0
    base_checksum: str | None = None

    def placed_children(self) -> set[NodeId]:
        return {child for _, child in self.edges_added}

    def check_conservation(self, candidates: frozenset[NodeId]) -> None:
        placed = self.placed_children() & candidates
        if placed | self.unplaced != candidates or placed & self.unplaced:
            raise AssertionError("delta does not partition candidates into placed/unplaced")

    def to_dict(self) -> dict:
        return {
            "l1_category": self.l1_category,
            "edges_added": [list(e) for e in self.edges_added],
            "unplaced": sorted(self.unplaced),
            "rejected_labels": list(self.rejected_labels),
            "strategy_used": self.strategy_used.value,
            "passes": self.passes,
            "base_checksum": self.base_checksum,
        }

    @classmethod
    def from_dict(cls, d: dict) -> HierarchyDelta:
        return cls(
            l1_category=d["l1_category"],
            edges_added=[(p, c) for p, c in d["edges_added"]],
            unplaced=set(d.get("unplaced", [])),
            rejected_labels=list(d.get("rejected_labels", [])),
            strategy_used=Strategy(d.get("strategy_used", "one_shot")),
            passes=int(d.get("passes", 0)),
            base_checksum=d.get("base_checksum"),
        )


@dataclass(frozen=True)
class StrategyChoice:
    strategy: Strategy
    reason: str
    estimated_tokens: int


@dataclass(frozen=True)
class ReviewFinding:
    kind: FindingKind
    node: NodeId
    current_parent: NodeId
    suggested_parent: NodeId | None
    rationale: str

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "node": self.node,
            "current_parent": self.current_parent,
            "suggested_parent": self.suggested_parent,
            "rationale": self.rationale,
        }


@dataclass(frozen=True)
class EvaluationVerdict:
    approved: bool
    findings: tuple[ReviewFinding, ...] = ()


# ---------------------------------------------------------------------------
# Shared plumbing
# ---------------------------------------------------------------------------


def _candidate_order(
    existing: Hierarchy, candidates: CandidateSet, order: Sequence[NodeId] | None
) -> list[NodeId]:
    """Validated candidate working order (given order, or label-sorted)."""
    for nid in candidates.candidates:
        existing.node(nid)
    existing.node(candidates.l1_category)
    branch_nodes = existing.descendants(candidates.l1_category) | {candidates.l1_category}
    overlap = candidates.candidates & branch_nodes
    if overlap:
        raise ValueError(
            f"candidates already inside the {candidates.l1_category!r} branch: {sorted(overlap)[:5]}"
        )
    if order is not None:
        ordered = [nid for nid in order if nid in candidates.candidates]
        if set(ordered) != candidates.candidates or len(ordered) != len(candidates.candidates):
            raise ValueError("order must be a permutation of the candidate set")
        return ordered
    return sorted(candidates.candidates, key=lambda nid: existing.node(nid).label)


def _request(payload: str) -> PromptRequest:
    return PromptRequest(
        system_instruction=SYSTEM_TAXONOMIST,
        payload=payload,
        max_output_tokens=DEFAULT_MAX_OUTPUT_TOKENS,
    )


class _Placement:
    """Working state while a strategy fills in one category branch."""

    def __init__(self, existing: Hierarchy, root: NodeId, candidates: frozenset[NodeId]):
        self.scratch = existing.copy()
        self.root = root
        self.candidates = candidates
        self.edges: list[tuple[NodeId, NodeId]] = []
        self.rejected: list[str] = []
        self._rejected_seen: set[str] = set()
        self.passes = 0
        self.labels = {existing.node(n).label: n for n in existing.node_ids()}

    def branch_ids(self) -> set[NodeId]:
        return self.scratch.descendants(self.root) | {self.root}

    def known_labels(self) -> set[str]:
        return {self.scratch.node(n).label for n in self.branch_ids()} | {
            self.scratch.node(c).label for c in self.candidates
        }

    def reject_labels(self, labels: Sequence[str]) -> None:
        for label in labels:
            if label not in self._rejected_seen:
                self._rejected_seen.add(label)
                self.rejected.append(label)

    def try_add(self, parent: NodeId, child: NodeId) -> bool:
        """Attach a candidate, honoring cycle and root safety; returns success."""
        if child not in self.candidates:
            logger.debug("ignoring edge onto non-candidate %r", child)
            return False
        if child in self.scratch.l1_roots:
            return False
        if self.scratch.has_edge(parent, child):
            return True
        try:
            self.scratch.add_edge(parent, child)
        except Exception:
            logger.debug("rejected unsafe edge %r -> %r", parent, child)
            return False
        self.edges.append((parent, child))
        return True

    def remove(self, parent: NodeId, child: NodeId) -> None:
        if (parent, child) in self.edges:
            self.scratch.remove_edge(parent, child)
            self.edges.remove((parent, child))

    def delta(self, strategy: Strategy) -> HierarchyDelta:
        placed = {child for _, child in self.edges}
        return HierarchyDelta(
            l1_category=self.root,
            edges_added=list(self.edges),
            unplaced=set(self.candidates) - placed,
            rejected_labels=list(self.rejected),
            strategy_used=strategy,
            passes=self.passes,
        )


# ---------------------------------------------------------------------------
# Strategy selection
# ---------------------------------------------------------------------------


def select_strategy(
    existing: Hierarchy, candidates: CandidateSet, provider_config
) -> StrategyChoice:
    """Pick one_shot iff the full branch rendering fits the context budget.

    ``provider_config`` may be any object with a ``context_budget_tokens``
    attribute, or a plain integer budget.
    """
    budget = getattr(provider_config, "context_budget_tokens", provider_config)
    labels = sorted(existing.node(n).label for n in candidates.candidates)
    payload = render_template(
        "one_shot",
        existing_hierarchy=render_branch(existing, candidates.l1_category),
        candidates=json_list(labels),
    )
    estimated = (
        estimate_tokens(SYSTEM_TAXONOMIST) + estimate_tokens(payload) + DEFAULT_MAX_OUTPUT_TOKENS
    )
    usable = int(budget * 0.9)
    if not candidates.candidates:
        return StrategyChoice(Strategy.ONE_SHOT, "no candidates to place", estimated)
    if estimated <= usable:
        return StrategyChoice(
            Strategy.ONE_SHOT,
            f"full rendering fits the context budget ({estimated} <= {usable} tokens)",
            estimated,
        )
    return StrategyChoice(
        Strategy.CYCLICAL,
        f"full rendering exceeds the context budget ({estimated} > {usable} tokens)",
        estimated,
    )


# ---------------------------------------------------------------------------
# One-shot strategy
# ---------------------------------------------------------------------------


def _apply_proposals(
    state: _Placement, pairs: list[tuple[str, str]], replace: bool = False
) -> None:
    """Fold parsed (parent label, child label) pairs into the working state.

    Edges are accepted only once their parent is connected to the branch, so
    candidate-under-candidate chains resolve in any response order and orphan
    subtrees never form.  With ``replace`` (correction pass) a mentioned
    child's previous candidate edges are dropped first.
    """
    id_pairs: list[tuple[NodeId, NodeId]] = []
    for parent_label, child_label in pairs:
        parent = state.labels.get(parent_label)
        child = state.labels.get(child_label)
        if parent is None or child is None:
            state.reject_labels([l for l, r in ((parent_label, parent), (child_label, child)) if r is None])
            continue
        id_pairs.append((parent, child))

    if replace:
        mentioned = {child for _, child in id_pairs if child in state.candidates}
        for parent, child in [e for e in state.edges if e[1] in mentioned]:
            state.remove(parent, child)

    pending = id_pairs
    while pending:
        connected = state.branch_ids()
        progressed = False
        still: list[tuple[NodeId, NodeId]] = []
        for parent, child in pending:
            if parent in connected:
                state.try_add(parent, child)
                progressed = True
            else:
                still.append((parent, child))
        if not progressed:
            break
        pending = still


def generate_one_shot(
    existing: Hierarchy,
    candidates: CandidateSet,
    provider: CompletionProviderBase,
    batch_size: int = DEFAULT_BATCH_SIZE,
    length_sort: bool = True,
    order: Sequence[NodeId] | None = None,
) -> HierarchyDelta:
    """Place all candidates against the rendered branch in one pass.

    When the candidates exceed ``batch_size`` they are split into batches
    generated against the progressively updated branch, followed by exactly
    one overall correction pass.  ``length_sort`` presents longer labels
    first; pass ``order`` to fix the working order explicitly.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be positive")
    ordered = _candidate_order(existing, candidates, order)
    state = _Placement(existing, candidates.l1_category, candidates.candidates)
    if not ordered:
        return state.delta(Strategy.ONE_SHOT)
    if length_sort and order is None:
        ordered = sorted(ordered, key=lambda n: (-len(existing.node(n).label), existing.node(n).label))

    batches = [ordered[i : i + batch_size] for i in range(0, len(ordered), batch_size)]
    for batch in batches:
        payload = render_template(
            "one_shot",
            existing_hierarchy=render_branch(state.scratch, state.root),
            candidates=json_list([existing.node(n).label for n in batch]),
        )
        state.passes += 1
        known = state.known_labels()
        pairs, rejected = complete_and_parse(
            provider, _request(payload), lambda text: parse_hierarchy(text, known)
        )
        state.reject_labels(rejected)
        _apply_proposals(state, pairs)

    if len(batches) > 1:
        payload = render_template(
            "correction",
            existing_hierarchy=render_branch(state.scratch, state.root),
            candidates=json_list([existing.node(n).label for n in ordered]),
        )
        state.passes += 1
        known = state.known_labels()
        pairs, rejected = complete_and_parse(
            provider, _request(payload), lambda text: parse_hierarchy(text, known)
        )
        state.reject_labels(rejected)
        _apply_proposals(state, pairs, replace=True)

    delta = state.delta(Strategy.ONE_SHOT)
    delta.check_conservation(candidates.candidates)
    return delta


# ---------------------------------------------------------------------------
# Cyclical strategy
# ---------------------------------------------------------------------------


def generate_cyclical(
    existing: Hierarchy,
    candidates: CandidateSet,
    provider: CompletionProviderBase,
    max_depth: int = DEFAULT_MAX_DEPTH,
    order: Sequence[NodeId] | None = None,
) -> HierarchyDelta:
    """Build the branch one level at a time.

    Per scope (an anchor node and its pool of candidates): classify each pool
    node keep/defer/Other against the anchor, attach kept nodes via a
    placement pass, route deferred nodes into the anchor's child subtrees,
    and recurse.  Recursion stops at ``max_depth`` or when the pool empties;
    leftovers are returned unplaced.  Subtrees that receive no candidates are
    skipped without provider calls.
    """
    if max_depth < 2:
        raise ValueError("max_depth must be at least 2")
    ordered = _candidate_order(existing, candidates, order)
    state = _Placement(existing, candidates.l1_category, candidates.candidates)
    if ordered:
        _cyclical_scope(state, provider, state.root, ordered, anchor_depth=1, max_depth=max_depth)
    delta = state.delta(Strategy.CYCLICAL)
    delta.check_conservation(candidates.candidates)
    return delta


def _cyclical_scope(
    state: _Placement,
    provider: CompletionProviderBase,
    anchor: NodeId,
    pool: list[NodeId],
    anchor_depth: int,
    max_depth: int,
) -> None:
    if not pool:
        return
    anchor_label = state.scratch.node(anchor).label
    child_labels = sorted(state.scratch.node(c).label for c in state.scratch.children_of(anchor))
    pool_labels = [state.scratch.node(n).label for n in pool]

    payload = render_template(
        "membership",
        anchor=anchor_label,
        examples=json_list(child_labels),
        candidates=json_list(pool_labels),
    )
    state.passes += 1
    verdicts = complete_and_parse(
        provider,
        _request(payload),
        lambda text: parse_classification(text, {KEEP, DEFER, OTHER}),
    )

    members: list[NodeId] = []
    deferred: list[NodeId] = []
    for nid, label in zip(pool, pool_labels):
        verdict = verdicts.get(label, {DEFER})  # unmentioned nodes are deferred
        # keep and defer are not exclusive: a node can sit directly under the
        # anchor and also belong deeper in the branch (a level-spanning
        # diamond), in which case it is placed here and routed down as well
        if KEEP in verdict:
            members.append(nid)
        if DEFER in verdict:
            deferred.append(nid)
        # Other: not in this branch; stays unplaced unless another scope takes it

    if members:
        _place_members(state, provider, anchor, members)

    if not deferred or anchor_depth + 2 > max_depth:
        return
    subtree_roots = sorted(
        state.scratch.children_of(anchor), key=lambda c: state.scratch.node(c).label
    )
    if not subtree_roots:
        return
    subtree_labels = [state.scratch.node(c).label for c in subtree_roots]
    payload = render_template(
        "routing",
        anchor=anchor_label,
        subtrees=json_list(subtree_labels),
        candidates=json_list([state.scratch.node(n).label for n in deferred]),
    )
    state.passes += 1
    routes = complete_and_parse(
        provider,
        _request(payload),
        lambda text: parse_classification(text, set(subtree_labels) | {OTHER}),
    )

    pools: dict[NodeId, list[NodeId]] = {root: [] for root in subtree_roots}
    by_label = dict(zip(subtree_labels, subtree_roots))
    for nid in deferred:
        label = state.scratch.node(nid).label
        for target in sorted(routes.get(label, set()) - {OTHER}):
            pools[by_label[target]].append(nid)
    for root in subtree_roots:
        _cyclical_scope(state, provider, root, pools[root], anchor_depth + 1, max_depth)


def _place_members(
    state: _Placement, provider: CompletionProviderBase, anchor: NodeId, members: list[NodeId]
) -> None:
    """Placement pass for one scope's kept members.

    Members the response does not mention attach under the anchor (the
    membership verdict is authoritative for their level); members whose
    proposed edges are all unsafe stay unplaced.
    """
    member_labels = [state.scratch.node(n).label for n in members]
    payload = render_template(
        "placement",
        anchor=state.scratch.node(anchor).label,
        existing_hierarchy=render_branch(state.scratch, anchor),
        candidates=json_list(member_labels),
    )
    state.passes += 1
    branch_known = {state.scratch.node(n).label for n in state.branch_ids()} | set(member_labels)
    pairs, rejected = complete_and_parse(
        provider, _request(payload), lambda text: parse_hierarchy(text, branch_known)
    )
    state.reject_labels(rejected)

    in_branch = state.scratch.descendants(state.root) | {state.root}
    proposals: dict[NodeId, list[NodeId]] = {}
    for parent_label, child_label in pairs:
        parent, child = state.labels.get(parent_label), state.labels.get(child_label)
        if parent is None or child is None or child not in state.candidates:
            continue
        proposals.setdefault(child, []).append(parent)

    for member in members:
        if member not in proposals:
            state.try_add(anchor, member)
            continue
        for parent in proposals[member]:
            if parent in in_branch or parent in state.branch_ids():
                state.try_add(parent, member)


# ---------------------------------------------------------------------------
# Review and evaluation
# ---------------------------------------------------------------------------


def _convert_findings(
    hierarchy: Hierarchy, raw_findings: list[dict]
) -> list[ReviewFinding]:
    """Validate raw finding dicts against the hierarchy.

    Findings referencing unknown nodes or kinds are dropped with a warning,
    as are findings whose suggested move would close a cycle (simulated
    cumulatively in response order).
    """
    labels = {hierarchy.node(n).label: n for n in hierarchy.node_ids()}
    simulated = hierarchy.copy()
    findings: list[ReviewFinding] = []
    for raw in raw_findings:
        try:
            kind = FindingKind(raw.get("kind", ""))
        except ValueError:
            logger.warning("dropping finding with unknown kind %r", raw.get("kind"))
            continue
        node = labels.get(str(raw.get("node")))
        current = labels.get(str(raw.get("current_parent")))
        suggested_label = raw.get("suggested_parent")
        suggested = labels.get(str(suggested_label)) if suggested_label is not None else None
        if node is None or current is None or (suggested_label is not None and suggested is None):
            logger.warning("dropping finding referencing unknown nodes: %r", raw)
            continue
        if suggested is not None:
            removed = simulated.remove_edge(current, node)
            try:
                simulated.add_edge(suggested, node)
            except Exception:
                if removed:
                    simulated.add_edge(current, node)
                logger.warning(
                    "dropping finding: moving %r under %r would be unsafe", node, suggested
                )
                continue
        findings.append(
            ReviewFinding(
                kind=kind,
                node=node,
                current_parent=current,
                suggested_parent=suggested,
                rationale=str(raw.get("rationale", "")),
            )
        )
    return findings


def review_pass(
    hierarchy: Hierarchy, provider: CompletionProviderBase, roots: Sequence[NodeId] | None = None
) -> list[ReviewFinding]:
    """Ask the provider to find flaws in each category branch."""
    findings: list[ReviewFinding] = []
    for root in roots if roots is not None else hierarchy.l1_roots:
        payload = render_template(
            "review", existing_hierarchy=render_branch(hierarchy, root)
        )
        _, raw = complete_and_parse(provider, _request(payload), parse_review_findings)
        findings.extend(_convert_findings(hierarchy, raw))
    return findings


def evaluate_subgraph(
    subgraph: Hierarchy, provider: CompletionProviderBase
) -> EvaluationVerdict:
    """Post-merge check of one category subtree; approved iff flawless."""
    if len(subgraph.l1_roots) != 1:
        raise ValueError("evaluation requires a subgraph rooted at a single L1 node")
    if subgraph.num_edges() == 0:
        return EvaluationVerdict(approved=True)
    payload = render_template(
        "evaluate", existing_hierarchy=render_branch(subgraph, subgraph.l1_roots[0])
    )
    approved, raw = complete_and_parse(provider, _request(payload), parse_review_findings)
    findings = tuple(_convert_findings(subgraph, raw))
    return EvaluationVerdict(approved=approved and not findings, findings=findings)
