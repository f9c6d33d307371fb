"""Deterministic graph builders used by tests, docs, and the CLI.

Three families:

- a small hand-written demo graph (three categories, one diamond, a pair of
  prefix-overlapping labels) for unit examples and the review workflow;
- synthetic gold taxonomies of configurable size/depth for round-trip and
  noise experiments;
- two large reference-scale benchmark fixtures whose coverage table the
  stats module reproduces exactly.
"""

from __future__ import annotations

import random

from .graph import Edge, Hierarchy, Node, NodeId, Provenance


def _slug(label: str) -> NodeId:
    return label.replace(" ", "-")


def detach_all(graph: Hierarchy) -> Hierarchy:
    """Same nodes and roots, no edges: the pre-generation working state."""
    bare = Hierarchy(class_filter=graph.class_filter)
    for node in graph.nodes():
        bare.add_node(node)
    bare.set_roots(list(graph.l1_roots))
    return bare


def _tree(
    spec: dict[str, dict],
    node_class: str,
    provenance: Provenance = Provenance.PREEXISTING,
) -> tuple[list[Node], list[Edge]]:
    """Nodes and edges from a nested {label: {child label: ...}} dict."""
    nodes: list[Node] = []
    edges: list[Edge] = []
    seen: set[NodeId] = set()

    def walk(label: str, children: dict) -> None:
        nid = _slug(label)
        if nid not in seen:
            seen.add(nid)
            nodes.append(Node(id=nid, label=label, node_class=node_class))
        for child_label, sub in children.items():
            walk(child_label, sub)
            edges.append(Edge(nid, _slug(child_label), provenance))

    for top, sub in spec.items():
        walk(top, sub)
    return nodes, edges


# ---------------------------------------------------------------------------
# Demo graph
# ---------------------------------------------------------------------------

_DEMO_TREE: dict[str, dict] = {
    "Beauty and Wellness": {
        "makeup": {"lipstick": {}, "eyeliner": {}, "face paint": {}},
        "skincare": {"moisturizer": {}, "sunscreen": {}},
        "hair care": {"shampoo": {}},
        "spa day": {"massage": {}},
    },
    "Celebrations": {
        "birthday": {"birthday card": {}, "birthday party": {}},
        "love": {
            "marriage": {"mom dad": {}, "romantic message": {}},
            "valentines day": {},
        },
    },
    "Health": {
        "fitness": {"yoga": {}, "running": {}},
        "nutrition": {"meal plan": {}, "vitamins": {}},
        "mental health": {"meditation": {}, "journaling": {}},
    },
}


def build_demo_graph() -> Hierarchy:
    """32-node demo KG with three L1 categories.

    Includes one diamond: "anniversary card" hangs under both "Celebrations"
    (level 1) and "marriage" (level 3), so its own level is 2.  The Health
    branch is a pure 10-node / 9-edge tree.
    """
    nodes, edges = _tree(_DEMO_TREE, node_class="intent")
    nodes.append(Node(id="anniversary-card", label="anniversary card", node_class="intent"))
    edges.append(Edge("Celebrations", "anniversary-card", Provenance.PREEXISTING))
    edges.append(Edge("marriage", "anniversary-card", Provenance.PREEXISTING))
    return Hierarchy.from_parts(
        nodes,
        edges,
        roots=["Beauty-and-Wellness", "Celebrations", "Health"],
        class_filter="intent",
    )


_PREFIX_TREE: dict[str, dict] = {
    "occasions": {
        "birthday": {"birthday party": {}, "birthday card": {}},
        "party": {"party supplies": {}, "party invitation": {}},
        "card": {"card template": {}},
        "wedding": {"wedding card": {}, "wedding party": {}},
    }
}


def build_prefix_fixture() -> Hierarchy:
    """Gold taxonomy whose labels overlap as prefixes ("birthday" vs
    "birthday party"), for order-sensitivity experiments."""
    nodes, edges = _tree(_PREFIX_TREE, node_class="intent")
    return Hierarchy.from_parts(nodes, edges, roots=["occasions"], class_filter="intent")


# ---------------------------------------------------------------------------
# Synthetic gold taxonomies
# ---------------------------------------------------------------------------


def build_gold_taxonomy(
    n_nodes: int,
    depth: int,
    seed: int = 0,
    extra_parent_rate: float = 0.08,
    node_class: str = "intent",
    root_label: str = "category",
) -> Hierarchy:
    """Random single-root gold taxonomy with exactly ``n_nodes`` nodes and a
    deepest level of exactly ``depth``.

    Every edge runs from level k-1 to level k (extra parents included), so
    each node's shortest-path level equals its construction level and the
    graph is acyclic by construction.
    """
    if depth < 2:
        raise ValueError("depth must be at least 2")
    if n_nodes < depth:
        raise ValueError("n_nodes must be at least depth")
    rng = random.Random(seed)
    levels: list[list[str]] = [[root_label]]
    per_level = {k: 1 for k in range(2, depth + 1)}
    for _ in range(n_nodes - depth):
        per_level[rng.randint(2, depth)] += 1
    counter = 0
    for k in range(2, depth + 1):
        tier: list[str] = []
        for _ in range(per_level[k]):
            counter += 1
            tier.append(f"topic {counter:03d}")
        levels.append(tier)

    nodes = [Node(id=_slug(root_label), label=root_label, node_class=node_class)]
    edges: list[Edge] = []
    for k in range(1, depth):
        above = levels[k - 1]
        for label in levels[k]:
            nodes.append(Node(id=_slug(label), label=label, node_class=node_class))
            parent = rng.choice(above)
            edges.append(Edge(_slug(parent), _slug(label)))
            if len(above) > 1 and rng.random() < extra_parent_rate:
                second = rng.choice([p for p in above if p != parent])
                edges.append(Edge(_slug(second), _slug(label)))
    return Hierarchy.from_parts(
        nodes, edges, roots=[_slug(root_label)], class_filter=node_class, check=False
    )


# ---------------------------------------------------------------------------
# Published-scale fixtures
# ---------------------------------------------------------------------------


def build_intents_benchmark() -> tuple[Hierarchy, Hierarchy]:
    """(before, after) intent graphs at reference benchmark scale.

    Node population (shared by both graphs):
        25 root intents, 12314 attachable intents, 46 permanently detached
        intents (12385 intents total), plus 1430 keyword-class nodes that the
        final hierarchy also threads in at level 4.

    After augmentation the whole-graph level histogram is
    {1: 25, 2: 904, 3: 4684, 4: 4961, 5: 2000, 6: 1195}; before augmentation
    only 931 intents hang directly under the roots (956 in hierarchy).
    """
    roots = [f"intent category {i:02d}" for i in range(1, 26)]
    nodes: list[Node] = [
        Node(id=_slug(r), label=r, node_class="intent") for r in roots
    ]

    def tier(prefix: str, node_class: str, start: int, count: int) -> list[str]:
        labels = [f"{prefix} {i:05d}" for i in range(start, start + count)]
        nodes.extend(Node(id=_slug(x), label=x, node_class=node_class) for x in labels)
        return labels

    l2 = tier("intent", "intent", 1, 904)
    l3 = tier("intent", "intent", 905, 4684)
    l4_intents = tier("intent", "intent", 5589, 3531)
    l4_keywords = tier("keyword", "keyword", 1, 1430)
    l4 = l4_intents + l4_keywords
    l5 = tier("intent", "intent", 9120, 2000)
    l6 = tier("intent", "intent", 11120, 1195)
    tier("intent", "intent", 12315, 46)  # never attached

    after_edges: list[Edge] = []
    for tier_labels, above in ((l2, roots), (l3, l2), (l4, l3), (l5, l4_intents), (l6, l5)):
        for i, label in enumerate(tier_labels):
            after_edges.append(Edge(_slug(above[i % len(above)]), _slug(label)))
    # a few diamonds: second parents drawn from the same upper tier, so
    # shortest-path levels are unchanged
    for i in range(10):
        after_edges.append(Edge(_slug(l2[(i + 7) % len(l2)]), _slug(l3[i])))

    before_attached = l2 + l3[:27]
    before_edges = [
        Edge(_slug(roots[i % 25]), _slug(label), Provenance.PREEXISTING)
        for i, label in enumerate(before_attached)
    ]

    root_ids = [_slug(r) for r in roots]
    before = Hierarchy.from_parts(
        nodes, before_edges, roots=root_ids, class_filter="intent", check=False
    )
    after = Hierarchy.from_parts(
        nodes, after_edges, roots=root_ids, class_filter="intent", check=False
    )
    return before, after


def build_colors_benchmark() -> tuple[Hierarchy, Hierarchy]:
    """(before, after) color graphs: 328 colors, 12 root families; the final
    hierarchy reaches every color node."""
    roots = [f"color family {i:02d}" for i in range(1, 13)]
    nodes: list[Node] = [Node(id=_slug(r), label=r, node_class="color") for r in roots]
    labels = [f"color {i:03d}" for i in range(1, 317)]
    nodes.extend(Node(id=_slug(x), label=x, node_class="color") for x in labels)

    l2, l3, l4 = labels[:120], labels[120:270], labels[270:]
    after_edges: list[Edge] = []
    for tier_labels, above in ((l2, roots), (l3, l2), (l4, l3)):
        for i, label in enumerate(tier_labels):
            after_edges.append(Edge(_slug(above[i % len(above)]), _slug(label)))

    root_ids = [_slug(r) for r in roots]
    before = Hierarchy.from_parts(nodes, [], roots=root_ids, class_filter="color")
    after = Hierarchy.from_parts(
        nodes, after_edges, roots=root_ids, class_filter="color", check=False
    )
    return before, after


def build_classification_fixture(
    n_nodes: int = 50, n_roots: int = 4, seed: int = 0
) -> Hierarchy:
    """Multi-root taxonomy for classification exercises.

    Non-root nodes attach inside one root's branch (root or an earlier branch
    member), so each has exactly one gold L1 category.
    """
    if n_nodes <= n_roots:
        raise ValueError("n_nodes must exceed n_roots")
    rng = random.Random(seed)
    g = Hierarchy(class_filter="intent")
    roots = [f"group {chr(ord('a') + i)}" for i in range(n_roots)]
    for label in roots:
        g.add_node(Node(id=_slug(label), label=label, node_class="intent"))
    g.set_roots([_slug(r) for r in roots])
    branch_members: dict[str, list[NodeId]] = {_slug(r): [_slug(r)] for r in roots}
    for i in range(n_nodes - n_roots):
        label = f"item {i:03d}"
        g.add_node(Node(id=_slug(label), label=label, node_class="intent"))
        root = _slug(roots[rng.randrange(n_roots)])
        parent = rng.choice(branch_members[root])
        g.add_edge(parent, _slug(label))
        branch_members[root].append(_slug(label))
    return g
