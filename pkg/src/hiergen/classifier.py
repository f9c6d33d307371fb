"""Multi-label assignment of KG nodes to top-level categories.

Batched prompting with worked examples, an always-available "Other" fallback,
and an order-robustness mode that votes across several shuffled passes.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .graph import Node, NodeId
from .prompts import SYSTEM_TAXONOMIST, json_list, render_template
from .provider import (
    CompletionProviderBase,
    PromptRequest,
    complete_and_parse,
    parse_classification,
)

logger = logging.getLogger(__name__)

DEFAULT_BATCH_SIZE = 20

#: A node keeps at most this many categories; beyond it the highest-support
#: ones win, ties broken by category order.
MAX_CATEGORIES_PER_NODE = 3

OTHER = "Other"


@dataclass(frozen=True)
class CategorySet:
    """The ordered L1 category labels for one node class.

    "Other" is always available as an outcome but never stored here.
    """

    categories: tuple[str, ...]
    node_class: str

    def __post_init__(self) -> None:
        if len(self.categories) < 2:
            raise ValueError("a category set needs at least 2 categories")
        if len(set(self.categories)) != len(self.categories):
            raise ValueError("category labels must be unique")
        if OTHER in self.categories:
            raise ValueError('"Other" is implicit and may not be listed as a category')

    def __contains__(self, label: str) -> bool:
        return label in self.categories

    def index(self, label: str) -> int:
        return self.categories.index(label)

    def allowed(self) -> set[str]:
        return set(self.categories) | {OTHER}


@dataclass(frozen=True)
class FewShotExample:
    node_label: str
    assigned_categories: frozenset[str]

    def __post_init__(self) -> None:
        if not self.assigned_categories:
            raise ValueError("assigned_categories must be non-empty")


class ResultProvenance(str, Enum):
    MODEL = "model"
    HUMAN_CORRECTED = "human-corrected"


@dataclass(frozen=True)
class ClassificationResult:
    """Final category assignment for one node.

    ``consensus_support`` is the mean vote fraction of the chosen categories
    across ordering passes (1.0 for a single pass).  ``parse_failed`` marks
    nodes that fell back to Other because the provider's answer for them was
    missing or unusable after repairs.
    """

    node: NodeId
    categories: frozenset[str]
    consensus_support: float = 1.0
    provenance: ResultProvenance = ResultProvenance.MODEL
    parse_failed: bool = False

    def __post_init__(self) -> None:
        if not self.categories:
            raise ValueError("categories must be non-empty")
        if OTHER in self.categories and len(self.categories) > 1:
            raise ValueError('"Other" may not co-occur with a real category')
        if not 0.0 < self.consensus_support <= 1.0:
            raise ValueError("consensus_support must lie in (0, 1]")

    def to_dict(self) -> dict:
        return {
            "node": self.node,
            "categories": sorted(self.categories),
            "consensus_support": self.consensus_support,
            "provenance": self.provenance.value,
            "parse_failed": self.parse_failed,
        }


def _example_pair(example: FewShotExample, categories: CategorySet) -> tuple[str, str]:
    """Render one worked example as a (shown input, expected output) pair."""
    bad = example.assigned_categories - categories.allowed()
    if bad:
        raise ValueError(f"example {example.node_label!r} uses unknown categories {sorted(bad)}")
    shown = render_template(
        "classify",
        categories=json_list(list(categories.categories)),
        candidates=json_list([example.node_label]),
    )
    expected = f'{{"{example.node_label}": {json_list(sorted(example.assigned_categories))}}}'
    return shown, expected


def _cap_categories(
    cats: set[str], categories: CategorySet, support: Mapping[str, int] | None = None
) -> set[str]:
    """Enforce Other exclusivity and the per-node category cap."""
    real = cats - {OTHER}
    if not real:
        return {OTHER}
    if len(real) <= MAX_CATEGORIES_PER_NODE:
        return real
    votes = support or {}
    ranked = sorted(real, key=lambda c: (-votes.get(c, 0), categories.index(c)))
    return set(ranked[:MAX_CATEGORIES_PER_NODE])


def classify_batch(
    nodes: Sequence[Node],
    categories: CategorySet,
    examples: Sequence[FewShotExample],
    provider: CompletionProviderBase,
    batch_size: int = DEFAULT_BATCH_SIZE,
    zero_shot: bool = False,
) -> list[ClassificationResult]:
    """Classify ``nodes`` in prompt batches; one result per input node.

    Nodes whose answers are missing or unusable come back as Other with
    ``parse_failed`` set.  Provider failures propagate; there is never
    partial output.
    """
    if not nodes:
        raise ValueError("nodes must be non-empty")
    if batch_size < 1:
        raise ValueError("batch_size must be positive")
    if not examples and not zero_shot:
        raise ValueError("worked examples are required unless zero_shot is requested")
    shots = tuple(_example_pair(e, categories) for e in examples) if not zero_shot else ()
    allowed = categories.allowed()
    by_label: dict[str, set[str]] = {}
    for start in range(0, len(nodes), batch_size):
        chunk = nodes[start : start + batch_size]
        payload = render_template(
            "classify",
            categories=json_list(list(categories.categories)),
            candidates=json_list([n.label for n in chunk]),
        )
        request = PromptRequest(
            system_instruction=SYSTEM_TAXONOMIST,
            payload=payload,
            few_shot_examples=shots,
        )
        parsed = complete_and_parse(
            provider, request, lambda text: parse_classification(text, allowed)
        )
        by_label.update(parsed)

    results: list[ClassificationResult] = []
    for node in nodes:
        cats = by_label.get(node.label)
        if cats is None:
            results.append(
                ClassificationResult(node=node.id, categories=frozenset({OTHER}), parse_failed=True)
            )
            continue
        results.append(
            ClassificationResult(
                node=node.id, categories=frozenset(_cap_categories(cats, categories))
            )
        )
    return results


def classify_all(
    nodes: Sequence[Node],
    categories: CategorySet,
    examples: Sequence[FewShotExample],
    provider: CompletionProviderBase,
    passes: int = 1,
    seed: int = 0,
    batch_size: int = DEFAULT_BATCH_SIZE,
    zero_shot: bool = False,
) -> list[ClassificationResult]:
    """Consensus classification over ``passes`` independently shuffled orders.

    Final categories are the majority vote per (node, category); exact-half
    support counts as inclusion.  Deterministic given (inputs, seed).
    """
    if passes < 1 or passes % 2 == 0:
        raise ValueError("passes must be an odd positive integer")
    if not nodes:
        raise ValueError("nodes must be non-empty")
    votes: dict[NodeId, dict[str, int]] = {n.id: {} for n in nodes}
    failed: set[NodeId] = set()
    for pass_index in range(passes):
        order = list(nodes)
        random.Random(seed * 1_000_003 + pass_index).shuffle(order)
        for result in classify_batch(order, categories, examples, provider, batch_size, zero_shot):
            tally = votes[result.node]
            for cat in result.categories:
                tally[cat] = tally.get(cat, 0) + 1
            if result.parse_failed:
                failed.add(result.node)

    results: list[ClassificationResult] = []
    for node in nodes:
        tally = votes[node.id]
        chosen = {cat for cat, v in tally.items() if 2 * v >= passes}
        chosen = _cap_categories(chosen, categories, tally) if chosen else {OTHER}
        if chosen == {OTHER} and OTHER not in tally:
            # nothing reached majority; Other is the only safe assignment
            support = 1.0 / passes
        else:
            support = sum(tally.get(c, passes) for c in chosen) / (len(chosen) * passes)
        results.append(
            ClassificationResult(
                node=node.id,
                categories=frozenset(chosen),
                consensus_support=min(1.0, support),
                parse_failed=node.id in failed,
            )
        )
    return results


def compare_prompt_modes(
    nodes: Sequence[Node],
    categories: CategorySet,
    examples: Sequence[FewShotExample],
    provider: CompletionProviderBase,
    gold: Mapping[NodeId, Iterable[str]],
    batch_size: int = DEFAULT_BATCH_SIZE,
) -> dict[str, float]:
    """Accuracy of few-shot vs zero-shot prompting against a gold labeling.

    Accuracy is exact category-set match over the nodes present in ``gold``.
    No claim is made about which mode wins; that depends on the provider.
    """
    if not gold:
        raise ValueError("gold labeling must be non-empty")
    scored = [n for n in nodes if n.id in gold]
    if not scored:
        raise ValueError("no input node appears in the gold labeling")

    def accuracy(results: list[ClassificationResult]) -> float:
        by_id = {r.node: r.categories for r in results}
        hits = sum(1 for n in scored if by_id[n.id] == frozenset(gold[n.id]))
        return hits / len(scored)

    few = classify_batch(scored, categories, examples, provider, batch_size)
    zero = classify_batch(scored, categories, [], provider, batch_size, zero_shot=True)
    return {"few_shot": accuracy(few), "zero_shot": accuracy(zero)}
