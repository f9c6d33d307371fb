"""Offline experiment harness comparing the two generation strategies.

Two instruments:

- a noise sweep measuring per-depth edge accuracy for both strategies over a
  grid of corruption rates and seeds, exposing how mistakes made high in the
  branch propagate downward in the recursive strategy;
- an order-divergence probe that re-runs the recursive strategy over shuffled
  candidate orders at fixed noise and reports how often the output changes.

Both emit plain dicts ready for JSON serialization; no thresholds are
asserted here beyond the noiseless case.
"""

from __future__ import annotations

import random
from statistics import mean

from .fixtures import build_gold_taxonomy, build_prefix_fixture
from .generator import CandidateSet, generate_cyclical, generate_one_shot
from .graph import Hierarchy, NodeId
from .mock import CorruptionMode, MockOracle, MockOracleConfig

DEFAULT_EPSILONS = (0.0, 0.05, 0.1, 0.2)
DEFAULT_SEEDS = 20


def flatten_for_generation(gold: Hierarchy) -> tuple[Hierarchy, CandidateSet]:
    """Strip a single-root gold taxonomy down to its root plus detached
    nodes: the starting state a generation strategy must rebuild from."""
    if len(gold.l1_roots) != 1:
        raise ValueError("flattening expects a single-root gold taxonomy")
    root = gold.l1_roots[0]
    existing = Hierarchy(class_filter=gold.class_filter)
    for node in gold.nodes():
        existing.add_node(node)
    existing.set_roots([root])
    candidates = frozenset(n for n in existing.node_ids() if n != root)
    return existing, CandidateSet(l1_category=root, candidates=candidates)


def edge_accuracy_by_depth(
    gold: Hierarchy, proposed_edges: set[tuple[NodeId, NodeId]]
) -> dict[int, float]:
    """Fraction of gold edges reproduced, grouped by the gold level of the
    child endpoint (depth 2 = edges out of the root)."""
    gold_by_depth: dict[int, set[tuple[NodeId, NodeId]]] = {}
    for edge in gold.edges():
        depth = gold.level_of(edge.child)
        assert depth is not None
        gold_by_depth.setdefault(depth, set()).add(edge.key())
    return {
        depth: len(edges & proposed_edges) / len(edges)
        for depth, edges in sorted(gold_by_depth.items())
    }


def run_noise_sweep(
    epsilons: tuple[float, ...] = DEFAULT_EPSILONS,
    n_seeds: int = DEFAULT_SEEDS,
    n_nodes: int = 200,
    depth: int = 5,
    corruption_mode: CorruptionMode = CorruptionMode.WRONG_CATEGORY,
    fixture_seed: int = 0,
    max_depth: int = 6,
    batch_size: int = 40,
    gold: Hierarchy | None = None,
) -> dict:
    """Per-depth edge accuracy for both strategies over a noise grid.

    Every (epsilon, seed) cell runs one_shot and cyclical against the same
    corrupted oracle; reported numbers are means over seeds.
    """
    if n_seeds < 1:
        raise ValueError("n_seeds must be positive")
    gold = gold if gold is not None else build_gold_taxonomy(n_nodes, depth, seed=fixture_seed)
    existing, candidates = flatten_for_generation(gold)
    gold_edge_count = gold.num_edges()
    depths = sorted({lvl for lvl in (gold.level_of(e.child) for e in gold.edges()) if lvl})

    strategies: dict[str, dict[str, dict]] = {"one_shot": {}, "cyclical": {}}
    for epsilon in epsilons:
        cells: dict[str, list[dict[int, float]]] = {"one_shot": [], "cyclical": []}
        overall: dict[str, list[float]] = {"one_shot": [], "cyclical": []}
        for seed in range(n_seeds):
            oracle = MockOracle(
                MockOracleConfig(
                    fixture=gold,
                    noise_rate=epsilon,
                    seed=seed,
                    corruption_mode=corruption_mode,
                )
            )
            runs = {
                "one_shot": generate_one_shot(existing, candidates, oracle, batch_size=batch_size),
                "cyclical": generate_cyclical(existing, candidates, oracle, max_depth=max_depth),
            }
            for name, delta in runs.items():
                proposed = set(delta.edges_added)
                cells[name].append(edge_accuracy_by_depth(gold, proposed))
                overall[name].append(len(proposed & gold.edge_keys()) / gold_edge_count)
        for name in strategies:
            per_depth = {
                str(d): mean(cell.get(d, 0.0) for cell in cells[name]) for d in depths
            }
            strategies[name][f"{epsilon:g}"] = {
                "per_depth": per_depth,
                "overall": mean(overall[name]),
                "seeds": n_seeds,
            }

    return {
        "config": {
            "epsilons": [f"{e:g}" for e in epsilons],
            "seeds": n_seeds,
            "n_nodes": len(gold),
            "depth": depth,
            "corruption_mode": corruption_mode.value,
            "max_depth": max_depth,
            "batch_size": batch_size,
        },
        "strategies": strategies,
    }


def order_divergence(
    epsilon: float = 0.1,
    permutations: int = 10,
    seed: int = 0,
    max_depth: int = 6,
    gold: Hierarchy | None = None,
) -> dict:
    """How often shuffling the candidate order changes the recursive
    strategy's output, on a fixture with prefix-overlapping labels.

    Returns the fraction of permutation pairs whose edge sets differ; no
    threshold is asserted.
    """
    if permutations < 2:
        raise ValueError("need at least 2 permutations to compare")
    gold = gold if gold is not None else build_prefix_fixture()
    existing, candidates = flatten_for_generation(gold)
    oracle = MockOracle(MockOracleConfig(fixture=gold, noise_rate=epsilon, seed=seed))
    rng = random.Random(seed)
    base = sorted(candidates.candidates)
    edge_sets: list[frozenset[tuple[NodeId, NodeId]]] = []
    for _ in range(permutations):
        order = base[:]
        rng.shuffle(order)
        delta = generate_cyclical(existing, candidates, oracle, max_depth=max_depth, order=order)
        edge_sets.append(frozenset(delta.edges_added))
    pairs = [(i, j) for i in range(permutations) for j in range(i + 1, permutations)]
    differing = sum(1 for i, j in pairs if edge_sets[i] != edge_sets[j])
    return {
        "epsilon": epsilon,
        "permutations": permutations,
        "pairs_compared": len(pairs),
        "divergence_rate": differing / len(pairs),
        "distinct_outputs": len(set(edge_sets)),
    }
