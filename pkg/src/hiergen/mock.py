"""Deterministic fixture-backed completion provider for offline runs.

The mock answers every pipeline request type (classification, level
membership, subtree routing, placement, one-shot generation, correction,
review, evaluation) by consulting a gold taxonomy, then corrupts individual
response elements with probability ``noise_rate``.

Determinism: per-request randomness derives from (seed, request hash), so the
full transcript for a given (fixture, noise_rate, seed) is byte-identical
across runs and platforms, and concurrent calls cannot perturb each other.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from enum import Enum

from .errors import ProviderUnavailable, UnparseableOutput
from .graph import Hierarchy, NodeId
from .prompts import parse_sections
from .provider import (
    CompletionProviderBase,
    CompletionResponse,
    FinishReason,
    PromptRequest,
    request_hash,
)


class CorruptionMode(str, Enum):
    WRONG_CATEGORY = "wrong_category"
    SPURIOUS_PARENT = "spurious_parent"
    DROP_NODE = "drop_node"


@dataclass
class MockOracleConfig:
    """Gold fixture plus noise controls.

    ``zero_shot_noise_rate``, when set, applies to requests that carry no
    few-shot examples — letting a harness emulate a configured accuracy gap
    between prompt modes.  ``fail_labels`` names category/anchor labels whose
    requests fail with ProviderUnavailable (fault injection).
    """

    fixture: Hierarchy
    noise_rate: float = 0.0
    seed: int = 0
    corruption_mode: CorruptionMode = CorruptionMode.WRONG_CATEGORY
    zero_shot_noise_rate: float | None = None
    fail_labels: frozenset[str] = frozenset()
    context_budget_tokens: int = 32768

    def __post_init__(self) -> None:
        if not 0.0 <= self.noise_rate <= 1.0:
            raise ValueError("noise_rate must lie in [0, 1]")


def flatten_nested(tree: dict) -> set[str]:
    """All labels appearing anywhere in a nested label dictionary."""
    labels: set[str] = set()

    def walk(d: dict) -> None:
        for key, value in d.items():
            labels.add(str(key))
            if isinstance(value, dict):
                walk(value)

    walk(tree)
    return labels


def nested_pairs(tree: dict) -> list[tuple[str, str]]:
    """(parent, child) pairs appearing in a nested label dictionary."""
    pairs: list[tuple[str, str]] = []

    def walk(parent: str, d: dict) -> None:
        for key, value in d.items():
            pairs.append((parent, str(key)))
            if isinstance(value, dict):
                walk(str(key), value)

    for top, value in tree.items():
        if isinstance(value, dict):
            walk(str(top), value)
    return pairs


class MockOracle(CompletionProviderBase):
    """Answers prompts from a gold taxonomy with seeded corruption."""

    def __init__(self, config: MockOracleConfig):
        self.config = config
        self.context_budget_tokens = config.context_budget_tokens
        gold = config.fixture
        self._gold = gold
        self._by_label: dict[str, NodeId] = {}
        for node in gold.nodes():
            self._by_label.setdefault(node.label, node.id)
        self._root_labels = [gold.node(r).label for r in gold.l1_roots]
        # label -> labels of the L1 roots whose subtree contains it
        self._roots_reaching: dict[str, set[str]] = {}
        for root_id in gold.l1_roots:
            root_label = gold.node(root_id).label
            for nid in gold.descendants(root_id) | {root_id}:
                label = gold.node(nid).label
                self._roots_reaching.setdefault(label, set()).add(root_label)
        self._descendant_cache: dict[str, set[str]] = {}

    # -- gold lookups --------------------------------------------------------

    def _gold_parents(self, label: str) -> set[str]:
        nid = self._by_label.get(label)
        if nid is None:
            return set()
        return {self._gold.node(p).label for p in self._gold.parents_of(nid)}

    def _gold_descendants(self, label: str) -> set[str]:
        if label in self._descendant_cache:
            return self._descendant_cache[label]
        nid = self._by_label.get(label)
        if nid is None:
            result: set[str] = set()
        else:
            result = {self._gold.node(d).label for d in self._gold.descendants(nid)}
        self._descendant_cache[label] = result
        return result

    def _nearest_present_ancestor(self, label: str, present: set[str]) -> str | None:
        """Walk gold parents breadth-first until a present label is found."""
        frontier = sorted(self._gold_parents(label))
        seen: set[str] = set(frontier)
        while frontier:
            for candidate in frontier:
                if candidate in present:
                    return candidate
            next_frontier: list[str] = []
            for candidate in frontier:
                for parent in sorted(self._gold_parents(candidate)):
                    if parent not in seen:
                        seen.add(parent)
                        next_frontier.append(parent)
            frontier = next_frontier
        return None

    # -- entry point ---------------------------------------------------------

    #: Which corruption modes touch which answer kinds: wrong_category hits
    #: categorical choices, spurious_parent hits proposed edges, drop_node
    #: omits elements of any answer.
    _ELIGIBLE_MODES = {
        "l1-classification": {CorruptionMode.WRONG_CATEGORY, CorruptionMode.DROP_NODE},
        "level-membership": {CorruptionMode.WRONG_CATEGORY, CorruptionMode.DROP_NODE},
        "subtree-routing": {CorruptionMode.WRONG_CATEGORY, CorruptionMode.DROP_NODE},
        "placement": {CorruptionMode.SPURIOUS_PARENT, CorruptionMode.DROP_NODE},
        "one-shot-generation": {CorruptionMode.SPURIOUS_PARENT, CorruptionMode.DROP_NODE},
        "overall-correction": {CorruptionMode.SPURIOUS_PARENT, CorruptionMode.DROP_NODE},
        "hierarchy-review": set(CorruptionMode),
        "subgraph-evaluation": set(CorruptionMode),
    }

    def complete(self, request: PromptRequest) -> CompletionResponse:
        self.check_budget(request)
        sections = parse_sections(request.payload)
        task = sections.get("task", "")
        self._maybe_fail(sections)
        rng = self._rng_for(request)
        epsilon = self.config.noise_rate
        if self.config.zero_shot_noise_rate is not None and not request.few_shot_examples:
            epsilon = self.config.zero_shot_noise_rate
        if self.config.corruption_mode not in self._ELIGIBLE_MODES.get(task, set()):
            epsilon = 0.0

        if task == "l1-classification":
            text = self._answer_classification(sections, rng, epsilon)
        elif task == "level-membership":
            text = self._answer_membership(sections, rng, epsilon)
        elif task == "subtree-routing":
            text = self._answer_routing(sections, rng, epsilon)
        elif task == "placement":
            text = self._answer_placement(sections, rng, epsilon)
        elif task in ("one-shot-generation", "overall-correction"):
            text = self._answer_generation(sections, rng, epsilon)
        elif task in ("hierarchy-review", "subgraph-evaluation"):
            text = self._answer_review(sections, rng, epsilon)
        else:
            raise UnparseableOutput(f"mock oracle cannot interpret task {task!r}")
        return CompletionResponse(
            raw_text=text,
            finish_reason=FinishReason.COMPLETE,
            provider_metadata={"provider": "mock", "task": task},
        )

    def _rng_for(self, request: PromptRequest) -> random.Random:
        digest = hashlib.sha256(
            f"{self.config.seed}:{request_hash(request)}".encode("utf-8")
        ).digest()
        return random.Random(int.from_bytes(digest[:8], "big"))

    def _maybe_fail(self, sections: dict[str, str]) -> None:
        if not self.config.fail_labels:
            return
        in_scope: set[str] = set()
        anchor = sections.get("anchor")
        if anchor:
            in_scope.add(anchor)
        existing = sections.get("existing_hierarchy")
        if existing:
            try:
                in_scope.update(json.loads(existing).keys())
            except (json.JSONDecodeError, AttributeError):
                pass
        if in_scope & self.config.fail_labels:
            raise ProviderUnavailable("mock oracle configured to fail for this category")

    @staticmethod
    def _json(obj) -> str:
        return json.dumps(obj, ensure_ascii=True, sort_keys=True)

    # -- task answers --------------------------------------------------------

    def _answer_classification(
        self, sections: dict[str, str], rng: random.Random, epsilon: float
    ) -> str:
        categories = json.loads(sections["categories"])
        labels = json.loads(sections["nodes"])
        offered = set(categories)
        mode = self.config.corruption_mode
        result: dict[str, list[str]] = {}
        for label in labels:
            gold = sorted(self._roots_reaching.get(label, set()) & offered)
            answer = gold if gold else ["Other"]
            if rng.random() < epsilon:
                if mode == CorruptionMode.DROP_NODE:
                    continue
                wrong_pool = sorted((offered | {"Other"}) - set(answer))
                if wrong_pool:
                    answer = [rng.choice(wrong_pool)]
            result[label] = answer
        return self._json(result)

    def _answer_membership(
        self, sections: dict[str, str], rng: random.Random, epsilon: float
    ) -> str:
        anchor = sections["anchor"].strip()
        labels = json.loads(sections["candidates"])
        anchor_descendants = self._gold_descendants(anchor)
        result: dict[str, list[str]] = {}
        for label in labels:
            parents = self._gold_parents(label)
            if anchor in parents:
                answer = ["keep"]
                # a second gold parent deeper in this branch means the node
                # also continues down (a level-spanning diamond)
                if parents & anchor_descendants:
                    answer.append("defer")
            elif label in anchor_descendants:
                answer = ["defer"]
            else:
                answer = ["Other"]
            if rng.random() < epsilon:
                if self.config.corruption_mode == CorruptionMode.DROP_NODE:
                    continue
                answer = [rng.choice(sorted({"keep", "defer", "Other"} - set(answer)))]
            result[label] = answer
        return self._json(result)

    def _answer_routing(
        self, sections: dict[str, str], rng: random.Random, epsilon: float
    ) -> str:
        subtrees = json.loads(sections["subtrees"])
        labels = json.loads(sections["candidates"])
        result: dict[str, list[str]] = {}
        for label in labels:
            answer = sorted(s for s in subtrees if label in self._gold_descendants(s))
            if not answer:
                answer = ["Other"]
            if rng.random() < epsilon:
                if self.config.corruption_mode == CorruptionMode.DROP_NODE:
                    continue
                wrong_pool = sorted(set(subtrees) - set(answer))
                answer = [rng.choice(wrong_pool)] if wrong_pool else ["Other"]
            result[label] = answer
        return self._json(result)

    def _answer_placement(
        self, sections: dict[str, str], rng: random.Random, epsilon: float
    ) -> str:
        anchor = sections["anchor"].strip()
        labels = json.loads(sections["candidates"])
        branch = flatten_nested(json.loads(sections["existing_hierarchy"]))
        placements: dict[str, dict[str, dict]] = {}
        for label in labels:
            gold_parents = self._gold_parents(label)
            if anchor in gold_parents:
                parent = anchor
            else:
                present = sorted(gold_parents & branch)
                parent = present[0] if present else anchor
            if rng.random() < epsilon:
                if self.config.corruption_mode == CorruptionMode.DROP_NODE:
                    continue
                pool = sorted(branch - {label})
                if pool:
                    parent = rng.choice(pool)
            placements.setdefault(parent, {})[label] = {}
        return self._json(placements)

    def _answer_generation(
        self, sections: dict[str, str], rng: random.Random, epsilon: float
    ) -> str:
        labels = json.loads(sections["candidates"])
        tree = json.loads(sections["existing_hierarchy"])
        existing = flatten_nested(tree)
        present = existing | set(labels)
        roots = sorted(tree.keys())
        fallback_root = roots[0] if roots else ""
        placements: dict[str, dict[str, dict]] = {}
        for label in labels:
            parents = sorted(self._gold_parents(label) & present)
            if not parents:
                ancestor = self._nearest_present_ancestor(label, present)
                parents = [ancestor if ancestor else fallback_root]
            if rng.random() < epsilon:
                if self.config.corruption_mode == CorruptionMode.DROP_NODE:
                    continue
                pool = sorted(present - {label})
                if pool:
                    parents = [rng.choice(pool)]
            for parent in parents:
                if parent:
                    placements.setdefault(parent, {})[label] = {}
        return self._json(placements)

    def _answer_review(
        self, sections: dict[str, str], rng: random.Random, epsilon: float
    ) -> str:
        tree = json.loads(sections["existing_hierarchy"])
        pairs = nested_pairs(tree)
        branch = flatten_nested(tree)
        findings: list[dict] = []
        seen: set[tuple[str, str]] = set()
        for parent, child in pairs:
            if (parent, child) in seen:
                continue
            seen.add((parent, child))
            gold_parents = self._gold_parents(child)
            is_wrong = bool(gold_parents) and parent not in gold_parents
            if rng.random() < epsilon:
                if self.config.corruption_mode == CorruptionMode.DROP_NODE:
                    continue
                is_wrong = not is_wrong
            if not is_wrong:
                continue
            suggested = sorted(gold_parents & branch)
            findings.append(
                {
                    "kind": "wrong_parent",
                    "node": child,
                    "current_parent": parent,
                    "suggested_parent": suggested[0] if suggested else None,
                    "rationale": f"{child!r} does not belong directly under {parent!r}",
                }
            )
        if findings:
            return self._json({"findings": findings})
        return self._json({"verdict": "approved"})
