"""Category assignment: batching, Other fallback, consensus voting, caps."""

from __future__ import annotations

import random

import pytest

from hiergen import (
    CategorySet,
    ClassificationResult,
    CorruptionMode,
    FewShotExample,
    Hierarchy,
    Node,
    ProviderUnavailable,
    classify_all,
    classify_batch,
    compare_prompt_modes,
)
from hiergen.fixtures import build_classification_fixture
from conftest import make_mock

DEMO_CATEGORIES = CategorySet(
    ("Beauty and Wellness", "Celebrations", "Health"), node_class="intent"
)
EXAMPLES = [
    FewShotExample("lipstick", frozenset({"Beauty and Wellness"})),
    FewShotExample("yoga", frozenset({"Health"})),
]


def nodes_of(graph: Hierarchy, ids: list[str]) -> list[Node]:
    return [graph.node(i) for i in ids]


# ---------------------------------------------------------------------------
# Value-type contracts
# ---------------------------------------------------------------------------


class TestCategorySet:
    def test_needs_two_categories(self):
        with pytest.raises(ValueError):
            CategorySet(("Solo",), "intent")

    def test_rejects_duplicates_and_other(self):
        with pytest.raises(ValueError):
            CategorySet(("A", "A"), "intent")
        with pytest.raises(ValueError):
            CategorySet(("A", "Other"), "intent")

    def test_allowed_adds_other(self):
        cs = CategorySet(("A", "B"), "intent")
        assert cs.allowed() == {"A", "B", "Other"}
        assert "A" in cs and "Other" not in cs


class TestClassificationResult:
    def test_other_is_exclusive(self):
        with pytest.raises(ValueError):
            ClassificationResult(node="x", categories=frozenset({"Other", "A"}))

    def test_support_must_be_positive_fraction(self):
        with pytest.raises(ValueError):
            ClassificationResult(node="x", categories=frozenset({"A"}), consensus_support=0.0)
        with pytest.raises(ValueError):
            ClassificationResult(node="x", categories=frozenset({"A"}), consensus_support=1.2)

    def test_to_dict_sorts_categories(self):
        r = ClassificationResult(node="x", categories=frozenset({"B", "A"}))
        assert r.to_dict()["categories"] == ["A", "B"]


# ---------------------------------------------------------------------------
# Single-pass batching
# ---------------------------------------------------------------------------


class TestClassifyBatch:
    def test_gold_assignment_and_other_fallback(self, demo):
        demo.add_node(Node(id="mystery", label="quantum flux", node_class="intent"))
        results = classify_batch(
            nodes_of(demo, ["lipstick", "birthday-card", "mystery"]),
            DEMO_CATEGORIES,
            EXAMPLES,
            make_mock(demo),
        )
        by_id = {r.node: r for r in results}
        assert by_id["lipstick"].categories == frozenset({"Beauty and Wellness"})
        assert by_id["birthday-card"].categories == frozenset({"Celebrations"})
        assert by_id["mystery"].categories == frozenset({"Other"})
        assert not by_id["mystery"].parse_failed  # a real Other answer, not a failure

    def test_examples_required_unless_zero_shot(self, demo):
        with pytest.raises(ValueError):
            classify_batch(nodes_of(demo, ["yoga"]), DEMO_CATEGORIES, [], make_mock(demo))
        results = classify_batch(
            nodes_of(demo, ["yoga"]), DEMO_CATEGORIES, [], make_mock(demo), zero_shot=True
        )
        assert results[0].categories == frozenset({"Health"})

    def test_example_with_unknown_category_rejected(self, demo):
        bad = [FewShotExample("thing", frozenset({"Nonexistent"}))]
        with pytest.raises(ValueError):
            classify_batch(nodes_of(demo, ["yoga"]), DEMO_CATEGORIES, bad, make_mock(demo))

    def test_batching_splits_requests(self, demo):
        class Counting:
            def __init__(self, inner):
                self.inner, self.calls = inner, 0
                self.context_budget_tokens = inner.context_budget_tokens

            def complete(self, request):
                self.calls += 1
                return self.inner.complete(request)

        provider = Counting(make_mock(demo))
        ids = ["lipstick", "eyeliner", "face-paint", "moisturizer", "sunscreen", "shampoo", "massage"]
        classify_batch(nodes_of(demo, ids), DEMO_CATEGORIES, EXAMPLES, provider, batch_size=3)
        assert provider.calls == 3  # ceil(7 / 3)

    def test_dropped_answers_become_other_with_parse_failed(self, demo):
        provider = make_mock(demo, noise_rate=1.0, corruption_mode=CorruptionMode.DROP_NODE)
        results = classify_batch(nodes_of(demo, ["yoga"]), DEMO_CATEGORIES, EXAMPLES, provider)
        assert results[0].categories == frozenset({"Other"})
        assert results[0].parse_failed

    def test_provider_failure_propagates_whole(self, demo):
        provider = make_mock(demo, fail_labels=frozenset({"anything"}))

        def explode(request):
            raise ProviderUnavailable("down")

        provider.complete = explode
        with pytest.raises(ProviderUnavailable):
            classify_batch(nodes_of(demo, ["yoga"]), DEMO_CATEGORIES, EXAMPLES, provider)

    def test_category_cap_applies(self):
        g = Hierarchy(class_filter="intent")
        for i in range(1, 6):
            g.add_node(Node(id=f"r{i}", label=f"root {i}", node_class="intent"))
        g.add_node(Node(id="x", label="everywhere", node_class="intent"))
        g.set_roots([f"r{i}" for i in range(1, 6)])
        for i in range(1, 5):
            g.add_edge(f"r{i}", "x")
        cats = CategorySet(tuple(f"root {i}" for i in range(1, 6)), "intent")
        results = classify_batch([g.node("x")], cats, [], make_mock(g), zero_shot=True)
        assert len(results[0].categories) == 3
        # ties broken by category order: the first three gold roots win
        assert results[0].categories == frozenset({"root 1", "root 2", "root 3"})


# ---------------------------------------------------------------------------
# Consensus over shuffled passes
# ---------------------------------------------------------------------------


class TestConsensus:
    def test_passes_must_be_odd(self, demo):
        with pytest.raises(ValueError):
            classify_all(nodes_of(demo, ["yoga"]), DEMO_CATEGORIES, EXAMPLES, make_mock(demo), passes=2)

    def test_noiseless_consensus_matches_single_pass(self, demo):
        ids = ["lipstick", "yoga", "marriage", "meditation", "running"]
        single = classify_all(nodes_of(demo, ids), DEMO_CATEGORIES, EXAMPLES, make_mock(demo), passes=1)
        voted = classify_all(nodes_of(demo, ids), DEMO_CATEGORIES, EXAMPLES, make_mock(demo), passes=3)
        assert [(r.node, r.categories) for r in single] == [(r.node, r.categories) for r in voted]
        assert all(r.consensus_support == 1.0 for r in voted)

    def test_order_invariant_without_noise(self, demo):
        ids = ["lipstick", "yoga", "marriage", "meditation", "running", "shampoo", "birthday"]
        rng = random.Random(9)
        outcomes = set()
        for _ in range(10):
            order = ids[:]
            rng.shuffle(order)
            results = classify_all(
                nodes_of(demo, order), DEMO_CATEGORIES, EXAMPLES, make_mock(demo), passes=1
            )
            outcomes.add(frozenset((r.node, r.categories) for r in results))
        assert len(outcomes) == 1

    def test_deterministic_given_seed(self, demo):
        ids = ["lipstick", "yoga", "marriage"]
        a = classify_all(
            nodes_of(demo, ids), DEMO_CATEGORIES, EXAMPLES,
            make_mock(demo, noise_rate=0.4, seed=7), passes=3, seed=5,
        )
        b = classify_all(
            nodes_of(demo, ids), DEMO_CATEGORIES, EXAMPLES,
            make_mock(demo, noise_rate=0.4, seed=7), passes=3, seed=5,
        )
        assert [r.to_dict() for r in a] == [r.to_dict() for r in b]

    def test_voting_beats_single_pass_under_noise(self):
        gold = build_classification_fixture(30, n_roots=3, seed=2)
        cats = CategorySet(
            tuple(gold.node(r).label for r in gold.l1_roots), node_class="intent"
        )
        scored = [n for n in gold.nodes() if n.id not in gold.l1_roots]
        truth = {
            n.id: frozenset(
                gold.node(r).label for r in gold.l1_roots if n.id in gold.descendants(r)
            )
            for n in scored
        }

        def accuracy(results):
            return sum(
                1 for r in results if r.categories == truth[r.node]
            ) / len(results)

        single_accs, voted_accs = [], []
        for seed in range(8):
            provider = make_mock(gold, noise_rate=0.3, seed=seed)
            single_accs.append(
                accuracy(classify_all(scored, cats, [], provider, passes=1, seed=seed, zero_shot=True))
            )
            voted_accs.append(
                accuracy(classify_all(scored, cats, [], provider, passes=5, seed=seed, zero_shot=True))
            )
        assert sum(voted_accs) / len(voted_accs) >= sum(single_accs) / len(single_accs)

    def test_majority_support_reported(self, demo):
        # at eps=0.4 with 5 passes some nodes carry partial support
        ids = ["lipstick", "yoga", "marriage", "meditation", "running", "shampoo"]
        results = classify_all(
            nodes_of(demo, ids), DEMO_CATEGORIES, EXAMPLES,
            make_mock(demo, noise_rate=0.4, seed=3), passes=5,
        )
        assert all(0.0 < r.consensus_support <= 1.0 for r in results)
        assert any(r.consensus_support < 1.0 for r in results)


# ---------------------------------------------------------------------------
# Prompt-mode comparison
# ---------------------------------------------------------------------------


def test_compare_prompt_modes_shows_configured_gap(demo):
    provider = make_mock(demo, noise_rate=0.0, zero_shot_noise_rate=0.6, seed=1)
    scored = [demo.node(i) for i in ["lipstick", "yoga", "marriage", "meditation", "running"]]
    gold = {
        n.id: ["Beauty and Wellness"] if n.id in demo.descendants("Beauty-and-Wellness")
        else ["Celebrations"] if n.id in demo.descendants("Celebrations")
        else ["Health"]
        for n in scored
    }
    report = compare_prompt_modes(scored, DEMO_CATEGORIES, EXAMPLES, provider, gold)
    assert set(report) == {"few_shot", "zero_shot"}
    assert report["few_shot"] == 1.0
    assert report["zero_shot"] < 1.0


def test_compare_prompt_modes_requires_overlap(demo):
    provider = make_mock(demo)
    with pytest.raises(ValueError):
        compare_prompt_modes(
            [demo.node("yoga")], DEMO_CATEGORIES, EXAMPLES, provider, {"unrelated": ["Health"]}
        )
