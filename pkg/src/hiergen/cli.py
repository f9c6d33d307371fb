"""Command-line pipeline: classify -> generate -> merge -> stats, plus the
review workflow, the strategy experiment harness, and a local service mode.

The pipeline is file-mediated: every stage reads and writes JSON files, so
each stage is independently re-runnable and auditable.

Exit codes: 0 success; 2 configuration error; 3 provider error; 4 partial
failure (some categories or files failed, others succeeded); 5 validation
error in an input file (corrupt snapshot, stale delta, schema violation).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .classifier import (
    CategorySet,
    ClassificationResult,
    FewShotExample,
    classify_all,
)
from .config import PipelineConfig, load_config
from .errors import (
    ConfigError,
    CycleRejected,
    HierGenError,
    ProviderError,
    StaleDelta,
    UnknownNode,
)
from .experiment import order_divergence, run_noise_sweep
from .fixtures import (
    build_colors_benchmark,
    build_demo_graph,
    build_gold_taxonomy,
    build_intents_benchmark,
    detach_all,
)
from .generator import (
    CandidateSet,
    HierarchyDelta,
    Strategy,
    generate_cyclical,
    generate_one_shot,
    select_strategy,
)
from .graph import Hierarchy
from .ingest import (
    CorrectionSet,
    GraphSnapshot,
    hierarchy_checksum,
    read_snapshot,
    write_snapshot,
)
from .mock import CorruptionMode, MockOracle, MockOracleConfig
from .provider import (
    CompletionProviderBase,
    ProviderConfig,
    RealProvider,
    ReplayProvider,
    TranscriptRecorder,
)
from .stats import ReviewSample, coverage_report, sample_for_review

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PROVIDER = 3
EXIT_PARTIAL = 4
EXIT_VALIDATION = 5


# ---------------------------------------------------------------------------
# Shared plumbing
# ---------------------------------------------------------------------------


def _load_graph(path: str) -> GraphSnapshot:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"snapshot file not found: {p}")
    return read_snapshot(p)


def build_provider(config: PipelineConfig) -> CompletionProviderBase:
    """Provider per config; mock answers from the configured gold fixture."""
    if config.provider == "real":
        inner: CompletionProviderBase = RealProvider(
            ProviderConfig(
                endpoint=config.endpoint,
                model_name=config.model_name,
                api_key_env_var=config.api_key_env_var,
                context_budget_tokens=config.context_budget_tokens,
                max_retries=config.max_retries,
                timeout_s=config.timeout_s,
            )
        )
    elif config.provider == "replay":
        inner = ReplayProvider(config.replay_path, config.context_budget_tokens)
    else:
        fixture_path = config.mock_fixture_path or config.snapshot_path
        fixture = _load_graph(fixture_path).hierarchy
        inner = MockOracle(
            MockOracleConfig(
                fixture=fixture,
                noise_rate=config.noise_rate,
                seed=config.mock_seed,
                corruption_mode=CorruptionMode(config.corruption_mode),
                zero_shot_noise_rate=config.zero_shot_noise_rate,
                fail_labels=frozenset(config.fail_categories),
                context_budget_tokens=config.context_budget_tokens,
            )
        )
    if config.transcript_path:
        return TranscriptRecorder(inner, config.transcript_path)
    return inner


def _read_categories(config: PipelineConfig) -> list[str]:
    p = Path(config.categories_path)
    if not p.exists():
        raise ConfigError(f"categories file not found: {p}")
    cats = [line.strip() for line in p.read_text(encoding="utf-8").splitlines() if line.strip()]
    if len(cats) < 2:
        raise ConfigError(f"categories file {p} must list at least 2 categories")
    return cats


def _read_examples(config: PipelineConfig) -> list[FewShotExample]:
    if not config.examples_path:
        return []
    p = Path(config.examples_path)
    if not p.exists():
        raise ConfigError(f"examples file not found: {p}")
    try:
        raw = json.loads(p.read_text(encoding="utf-8"))
        return [
            FewShotExample(e["label"], frozenset(e["categories"])) for e in raw
        ]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"examples file {p} is malformed: {exc}") from None


def _out_dir(config: PipelineConfig) -> Path:
    d = Path(config.output_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(
        json.dumps(payload, sort_keys=True, ensure_ascii=True, indent=1) + "\n",
        encoding="utf-8",
    )


def _node_class(config: PipelineConfig, graph: Hierarchy) -> str:
    return config.node_class or graph.class_filter


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_classify(config: PipelineConfig, output: str | None = None) -> int:
    """Assign every unattached node of the working class to L1 categories."""
    snapshot = _load_graph(config.snapshot_path)
    graph = snapshot.hierarchy
    categories = CategorySet(tuple(_read_categories(config)), _node_class(config, graph))
    examples = _read_examples(config)
    provider = build_provider(config)

    in_h = graph.in_hierarchy_ids()
    node_class = _node_class(config, graph)
    candidates = sorted(
        (n for n in graph.nodes() if n.node_class == node_class and n.id not in in_h),
        key=lambda n: n.id,
    )
    if candidates:
        results = classify_all(
            candidates,
            categories,
            examples,
            provider,
            passes=config.passes,
            seed=config.seed,
            batch_size=config.batch_size,
            zero_shot=not examples,
        )
    else:
        results = []
    out = Path(output) if output else _out_dir(config) / "classification.json"
    _write_json(
        out,
        {
            "node_class": node_class,
            "categories": list(categories.categories),
            "results": [r.to_dict() for r in results],
            "timestamp": config.timestamp,
        },
    )
    print(f"classified {len(results)} nodes into {len(categories.categories)} categories -> {out}")
    return EXIT_OK


def _load_results(path: str) -> tuple[list[str], list[ClassificationResult]]:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"classification results file not found: {p}")
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
        results = [
            ClassificationResult(
                node=r["node"],
                categories=frozenset(r["categories"]),
                consensus_support=r.get("consensus_support", 1.0),
                parse_failed=r.get("parse_failed", False),
            )
            for r in doc["results"]
        ]
        return list(doc["categories"]), results
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"results file {p} is malformed: {exc}") from None


def cmd_generate(config: PipelineConfig, results_path: str) -> int:
    """Run the generator per category; one delta file per nonempty category.

    Categories fail independently: a provider failure in one category leaves
    the others' deltas in place and exits with the partial-failure code.
    """
    snapshot = _load_graph(config.snapshot_path)
    graph = snapshot.hierarchy
    categories, results = _load_results(results_path)
    provider = build_provider(config)
    base = hierarchy_checksum(graph)
    out = _out_dir(config)

    roots_by_label = {graph.node(r).label: r for r in graph.l1_roots}
    assigned: dict[str, set[str]] = {c: set() for c in categories}
    for result in results:
        for cat in result.categories:
            if cat in assigned:
                assigned[cat].add(result.node)

    produced = 0
    failures: list[tuple[str, str]] = []
    for cat in categories:
        members = assigned[cat]
        if not members:
            continue
        root = roots_by_label.get(cat)
        if root is None:
            failures.append((cat, f"no L1 root node labeled {cat!r}"))
            continue
        candidate_set = CandidateSet(l1_category=root, candidates=frozenset(members))
        try:
            strategy = config.strategy
            if strategy == "auto":
                strategy = select_strategy(graph, candidate_set, provider).strategy.value
            if strategy == Strategy.ONE_SHOT.value:
                delta = generate_one_shot(
                    graph, candidate_set, provider, batch_size=config.generation_batch_size
                )
            else:
                delta = generate_cyclical(graph, candidate_set, provider, max_depth=config.max_depth)
        except ProviderError as exc:
            failures.append((cat, str(exc)))
            print(f"  {cat}: FAILED ({exc})")
            continue
        delta.base_checksum = base
        path = out / f"delta-{root}.json"
        _write_json(path, delta.to_dict())
        produced += 1
        print(
            f"  {cat}: strategy={delta.strategy_used.value} passes={delta.passes} "
            f"placed={len(delta.placed_children())} unplaced={len(delta.unplaced)} -> {path}"
        )
    if failures and produced:
        return EXIT_PARTIAL
    if failures:
        print(f"all categories failed; first error: {failures[0][1]}", file=sys.stderr)
        return EXIT_PROVIDER
    return EXIT_OK


def cmd_merge(
    config: PipelineConfig,
    delta_paths: list[str],
    corrections_paths: list[str] | None = None,
    output: str | None = None,
) -> int:
    """Apply delta/correction files to the snapshot, transactionally per file."""
    snapshot = _load_graph(config.snapshot_path)
    before = snapshot.hierarchy.copy()
    base = hierarchy_checksum(before)
    applied = 0
    failures: list[tuple[str, str]] = []

    for path in delta_paths:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"delta file not found: {p}")
        try:
            delta = HierarchyDelta.from_dict(json.loads(p.read_text(encoding="utf-8")))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            print(f"  {p}: schema error: {exc}", file=sys.stderr)
            failures.append((str(p), f"schema error: {exc}"))
            continue
        # every delta in the batch was generated against the pre-merge state
        if delta.base_checksum is not None and delta.base_checksum != base:
            print(f"  {p}: stale delta (snapshot changed since generation)", file=sys.stderr)
            failures.append((str(p), "stale delta"))
            continue
        try:
            delta.base_checksum = None
            snapshot.apply_delta(delta, timestamp=config.timestamp)
        except (CycleRejected, UnknownNode) as exc:
            print(f"  {p}: rejected: {exc}", file=sys.stderr)
            failures.append((str(p), str(exc)))
            continue
        applied += 1

    for path in corrections_paths or []:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"corrections file not found: {p}")
        try:
            corrections = CorrectionSet.from_dict(json.loads(p.read_text(encoding="utf-8")))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            print(f"  {p}: schema error: {exc}", file=sys.stderr)
            failures.append((str(p), f"schema error: {exc}"))
            continue
        report = snapshot.apply_corrections(corrections, timestamp=config.timestamp)
        applied += 1
        if report.failed:
            print(f"  {p}: {len(report.failed)} correction(s) rejected", file=sys.stderr)

    node_class = _node_class(config, snapshot.hierarchy)
    report = coverage_report(before, snapshot.hierarchy, node_class)
    print(
        f"coverage[{node_class}]: before {report.in_hierarchy_before}/{report.total_nodes} "
        f"after {report.in_hierarchy_after}/{report.total_nodes} "
        f"({100 * report.coverage_fraction:.2f}%)"
    )
    out_path = Path(output) if output else Path(config.snapshot_path)
    if applied:
        write_snapshot(snapshot, out_path)
        print(f"snapshot written -> {out_path}")
    else:
        print("no changes applied; snapshot unchanged")
    if failures and applied:
        return EXIT_PARTIAL
    if failures:
        return EXIT_VALIDATION
    return EXIT_OK


def cmd_stats(config: PipelineConfig, json_output: str | None = None) -> int:
    """Coverage and per-level table for the working node class."""
    after = _load_graph(config.snapshot_path).hierarchy
    before = (
        _load_graph(config.before_snapshot_path).hierarchy
        if config.before_snapshot_path
        else after
    )
    node_class = _node_class(config, after)
    report = coverage_report(before, after, node_class)

    level_keys = sorted(
        report.per_level_counts, key=lambda k: k if isinstance(k, int) else 10**6
    )
    header = ["class", "total", "before", "after"] + [f"L{k}" for k in level_keys] + ["coverage"]
    row = (
        [node_class, str(report.total_nodes), str(report.in_hierarchy_before), str(report.in_hierarchy_after)]
        + [str(report.per_level_counts[k]) for k in level_keys]
        + [f"{100 * report.coverage_fraction:.2f}%"]
    )
    widths = [max(len(h), len(v)) for h, v in zip(header, row)]
    print("  ".join(h.ljust(w) for h, w in zip(header, widths)))
    print("  ".join(v.ljust(w) for v, w in zip(row, widths)))
    print(
        f"coverage gain: {100 * report.coverage_delta:.2f}% of {node_class} nodes "
        f"newly reachable; hierarchy holds {report.hierarchy_node_count} nodes in total"
    )
    if json_output:
        _write_json(Path(json_output), report.to_dict())
    return EXIT_OK


def cmd_review_export(config: PipelineConfig, output: str | None = None) -> int:
    """Export a seeded stratified sample of subtrees for human review."""
    graph = _load_graph(config.snapshot_path).hierarchy
    samples = sample_for_review(graph, rate=config.sample_rate, seed=config.seed)
    out = Path(output) if output else _out_dir(config) / "review-samples.json"
    _write_json(
        out,
        {
            "samples": [s.to_dict() for s in samples],
            "rate": config.sample_rate,
            "seed": config.seed,
            "timestamp": config.timestamp,
        },
    )
    total = sum(len(s.nodes) for s in samples)
    print(f"exported {total} nodes across {len(samples)} categories -> {out}")
    return EXIT_OK


def cmd_review_apply(
    config: PipelineConfig, corrections_path: str, output: str | None = None
) -> int:
    """Apply a reviewer's correction file to the snapshot."""
    snapshot = _load_graph(config.snapshot_path)
    p = Path(corrections_path)
    if not p.exists():
        raise ConfigError(f"corrections file not found: {p}")
    try:
        corrections = CorrectionSet.from_dict(json.loads(p.read_text(encoding="utf-8")))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        print(f"{p}: schema error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    report = snapshot.apply_corrections(corrections, timestamp=config.timestamp)
    out_path = Path(output) if output else Path(config.snapshot_path)
    write_snapshot(snapshot, out_path)
    print(f"applied {len(report.applied)} correction(s), {len(report.failed)} rejected -> {out_path}")
    for failure in report.failed:
        print(f"  rejected {failure['node']}: {failure['reason']}", file=sys.stderr)
    if report.failed and report.applied:
        return EXIT_PARTIAL
    if report.failed:
        return EXIT_VALIDATION
    return EXIT_OK


def cmd_experiment(
    config: PipelineConfig,
    epsilons: list[float] | None = None,
    seeds: int | None = None,
    n_nodes: int = 200,
    depth: int = 5,
    output: str | None = None,
) -> int:
    """Noise sweeps comparing strategies, plus the order-divergence probe.

    One sweep per corruption mode: the modes attack different answer kinds,
    so a single mode would leave one strategy untouched.
    """
    report: dict = {"sweeps": {}}
    for mode in CorruptionMode:
        report["sweeps"][mode.value] = run_noise_sweep(
            epsilons=tuple(epsilons) if epsilons else (0.0, 0.05, 0.1, 0.2),
            n_seeds=seeds if seeds is not None else 20,
            n_nodes=n_nodes,
            depth=depth,
            corruption_mode=mode,
            max_depth=config.max_depth,
            batch_size=config.generation_batch_size,
        )
    divergence = order_divergence(epsilon=0.15, permutations=10, seed=config.seed)
    report["order_divergence"] = divergence

    for mode, sweep in report["sweeps"].items():
        depths = sorted(
            {d for cells in sweep["strategies"].values() for c in cells.values() for d in c["per_depth"]},
            key=int,
        )
        print(f"edge accuracy by depth ({sweep['config']['seeds']} seeds, "
              f"{sweep['config']['n_nodes']} nodes, corruption={mode})")
        print("  strategy   eps    " + "  ".join(f"L{d}" + " " * 3 for d in depths) + "overall")
        for name, cells in sweep["strategies"].items():
            for eps, cell in cells.items():
                per = "  ".join(f"{cell['per_depth'][d]:.3f}" for d in depths)
                print(f"  {name:9s}  {eps:5s}  {per}  {cell['overall']:.3f}")
    print(
        f"order divergence at eps={divergence['epsilon']:g}: "
        f"{divergence['divergence_rate']:.2f} over {divergence['pairs_compared']} permutation pairs"
    )
    out = Path(output) if output else _out_dir(config) / "experiment.json"
    _write_json(out, report)
    print(f"report -> {out}")
    return EXIT_OK


def cmd_serve(config: PipelineConfig, host: str | None = None, port: int | None = None) -> int:
    """Serve the review API against the configured snapshot."""
    import uvicorn

    from .server import create_app

    app = create_app(config)
    uvicorn.run(app, host=host or config.host, port=port or config.port, log_level="warning")
    return EXIT_OK


def cmd_fixture(name: str, output_dir: str, n_nodes: int = 200, depth: int = 5, seed: int = 0) -> int:
    """Write a built-in fixture as snapshot files plus companion inputs."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if name == "demo":
        graph = build_demo_graph()
        write_snapshot(graph, out / "demo.json")
        # work.json is the same population with every edge stripped: the
        # state the pipeline starts from, with demo.json as the mock's gold
        write_snapshot(detach_all(graph), out / "work.json")
        (out / "categories.txt").write_text(
            "".join(f"{graph.node(r).label}\n" for r in graph.l1_roots), encoding="utf-8"
        )
        _write_json(
            out / "examples.json",
            [
                {"label": "lipstick", "categories": ["Beauty and Wellness"]},
                {"label": "birthday card", "categories": ["Celebrations"]},
                {"label": "yoga", "categories": ["Health"]},
            ],
        )
        print(f"demo fixture -> {out}/demo.json, work.json, categories.txt, examples.json")
    elif name == "intents-benchmark":
        before, after = build_intents_benchmark()
        write_snapshot(before, out / "intents-before.json")
        write_snapshot(after, out / "intents-after.json")
        print(f"intents fixture -> {out}/intents-before.json, intents-after.json")
    elif name == "colors-benchmark":
        before, after = build_colors_benchmark()
        write_snapshot(before, out / "colors-before.json")
        write_snapshot(after, out / "colors-after.json")
        print(f"colors fixture -> {out}/colors-before.json, colors-after.json")
    elif name == "gold":
        gold = build_gold_taxonomy(n_nodes, depth, seed=seed)
        write_snapshot(gold, out / "gold.json")
        print(f"gold taxonomy ({n_nodes} nodes, depth {depth}) -> {out}/gold.json")
    else:
        raise ConfigError(f"unknown fixture {name!r}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hiergen",
        description="Augment a knowledge graph with generated multi-level hierarchies.",
    )
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="TOML or JSON config file")
        p.add_argument("--snapshot", help="override snapshot_path")
        p.add_argument("--output-dir", help="override output_dir")
        p.add_argument("--seed", type=int, help="override seed")

    p = sub.add_parser("classify", help="assign unattached nodes to L1 categories")
    common(p)
    p.add_argument("--output", help="results file path")

    p = sub.add_parser("generate", help="generate hierarchy deltas per category")
    common(p)
    p.add_argument("--results", required=True, help="classification results file")

    p = sub.add_parser("merge", help="apply delta/correction files to the snapshot")
    common(p)
    p.add_argument("--deltas", nargs="*", default=[], help="delta files")
    p.add_argument("--corrections", nargs="*", default=[], help="correction files")
    p.add_argument("--output", help="write the merged snapshot here instead of in place")

    p = sub.add_parser("stats", help="coverage and per-level table")
    common(p)
    p.add_argument("--before", help="override before_snapshot_path")
    p.add_argument("--json", dest="json_output", help="also write the report as JSON")

    p = sub.add_parser("review-export", help="export review samples")
    common(p)
    p.add_argument("--rate", type=float, help="override sample_rate")
    p.add_argument("--output", help="samples file path")

    p = sub.add_parser("review-apply", help="apply reviewer corrections")
    common(p)
    p.add_argument("--corrections", required=True, help="corrections file")
    p.add_argument("--output", help="write the updated snapshot here instead of in place")

    p = sub.add_parser("experiment", help="noise sweep comparing strategies")
    common(p)
    p.add_argument("--epsilons", type=float, nargs="*", help="corruption rates")
    p.add_argument("--seeds", type=int, help="seeds per cell")
    p.add_argument("--n-nodes", type=int, default=200)
    p.add_argument("--depth", type=int, default=5)
    p.add_argument("--output", help="report file path")

    p = sub.add_parser("serve", help="serve the review API")
    common(p)
    p.add_argument("--host")
    p.add_argument("--port", type=int)

    p = sub.add_parser("fixture", help="write a built-in fixture to disk")
    p.add_argument("name", choices=["demo", "intents-benchmark", "colors-benchmark", "gold"])
    p.add_argument("--output-dir", default="fixtures")
    p.add_argument("--n-nodes", type=int, default=200)
    p.add_argument("--depth", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _config_from_args(args: argparse.Namespace) -> PipelineConfig:
    overrides = {
        "snapshot_path": getattr(args, "snapshot", None),
        "output_dir": getattr(args, "output_dir", None),
        "seed": getattr(args, "seed", None),
        "before_snapshot_path": getattr(args, "before", None),
        "sample_rate": getattr(args, "rate", None),
    }
    return load_config(getattr(args, "config", None), overrides)


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        if args.command == "fixture":
            return cmd_fixture(args.name, args.output_dir, args.n_nodes, args.depth, args.seed)
        config = _config_from_args(args)
        if args.command == "classify":
            return cmd_classify(config, args.output)
        if args.command == "generate":
            return cmd_generate(config, args.results)
        if args.command == "merge":
            return cmd_merge(config, args.deltas, args.corrections, args.output)
        if args.command == "stats":
            return cmd_stats(config, args.json_output)
        if args.command == "review-export":
            return cmd_review_export(config, args.output)
        if args.command == "review-apply":
            return cmd_review_apply(config, args.corrections, args.output)
        if args.command == "experiment":
            return cmd_experiment(
                config, args.epsilons, args.seeds, args.n_nodes, args.depth, args.output
            )
        if args.command == "serve":
            return cmd_serve(config, args.host, args.port)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ProviderError as exc:
        print(f"provider error: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    except HierGenError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
