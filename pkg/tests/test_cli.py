"""End-to-end command-line pipeline runs against the mock provider."""

import json
from pathlib import Path

import pytest

from conftest import run_cli
from hiergen import read_snapshot
from hiergen.fixtures import build_demo_graph


def classify(ws: Path, *extra: str):
    return run_cli("classify", "--config", str(ws / "config.json"), *extra)


def generate(ws: Path, *extra: str):
    return run_cli(
        "generate",
        "--config",
        str(ws / "config.json"),
        "--results",
        str(ws / "out" / "classification.json"),
        *extra,
    )


def merge(ws: Path, *extra: str):
    deltas = sorted(str(p) for p in (ws / "out").glob("delta-*.json"))
    return run_cli("merge", "--config", str(ws / "config.json"), "--deltas", *deltas, *extra)


def patch_config(ws: Path, **changes) -> None:
    path = ws / "config.json"
    config = json.loads(path.read_text())
    config.update(changes)
    path.write_text(json.dumps(config))


class TestPipeline:
    def test_classify_generate_merge_stats(self, pipeline_workspace):
        ws = pipeline_workspace
        demo = build_demo_graph()

        r = classify(ws)
        assert r.returncode == 0, r.stderr
        results = json.loads((ws / "out" / "classification.json").read_text())
        assert results["node_class"] == "intent"
        assert len(results["results"]) == len(demo) - len(demo.l1_roots)

        r = generate(ws)
        assert r.returncode == 0, r.stderr
        delta_files = sorted((ws / "out").glob("delta-*.json"))
        assert [p.name for p in delta_files] == [
            "delta-Beauty-and-Wellness.json",
            "delta-Celebrations.json",
            "delta-Health.json",
        ]
        for p in delta_files:
            delta = json.loads(p.read_text())
            assert delta["unplaced"] == []
            assert delta["base_checksum"]

        r = merge(ws)
        assert r.returncode == 0, r.stderr
        merged = read_snapshot(ws / "work.json").hierarchy
        assert merged.edge_keys() == demo.edge_keys()

        r = run_cli(
            "stats",
            "--config",
            str(ws / "config.json"),
            "--json",
            str(ws / "out" / "stats.json"),
        )
        assert r.returncode == 0, r.stderr
        assert "coverage" in r.stdout
        stats = json.loads((ws / "out" / "stats.json").read_text())
        assert stats["total_nodes"] == len(demo)
        assert stats["coverage_fraction"] == 1.0

    def test_reruns_byte_identical(self, pipeline_workspace):
        ws = pipeline_workspace
        outputs = {}
        for run in ("a", "b"):
            out_dir = ws / f"out-{run}"
            r = classify(ws, "--output-dir", str(out_dir))
            assert r.returncode == 0, r.stderr
            r = run_cli(
                "generate",
                "--config",
                str(ws / "config.json"),
                "--output-dir",
                str(out_dir),
                "--results",
                str(out_dir / "classification.json"),
            )
            assert r.returncode == 0, r.stderr
            outputs[run] = {
                p.name: p.read_bytes() for p in sorted(out_dir.glob("*.json"))
            }
        assert outputs["a"] == outputs["b"]
        assert len(outputs["a"]) == 4  # classification + three deltas

    def test_merge_rejects_stale_deltas(self, pipeline_workspace):
        ws = pipeline_workspace
        assert classify(ws).returncode == 0
        assert generate(ws).returncode == 0
        assert merge(ws).returncode == 0
        # snapshot moved on; the same deltas no longer pin its checksum
        r = merge(ws)
        assert r.returncode == 5
        assert "stale delta" in r.stdout + r.stderr

    def test_examples_round_trip_through_prompts(self, pipeline_workspace):
        # classification must consume the few-shot example file without error
        # and still put every node in its gold category
        ws = pipeline_workspace
        assert classify(ws).returncode == 0
        results = json.loads((ws / "out" / "classification.json").read_text())
        demo = build_demo_graph()
        for entry in results["results"]:
            gold_roots = {
                demo.node(r).label
                for r in demo.l1_roots
                if entry["node"] in demo.descendants(r)
            }
            if gold_roots:
                assert set(entry["categories"]) == gold_roots


class TestFailureModes:
    def test_partial_category_failure(self, pipeline_workspace):
        ws = pipeline_workspace
        patch_config(ws, fail_categories=["Health"])
        assert classify(ws).returncode == 0
        r = generate(ws)
        assert r.returncode == 4
        assert "Health" in r.stdout + r.stderr
        names = {p.name for p in (ws / "out").glob("delta-*.json")}
        assert names == {"delta-Beauty-and-Wellness.json", "delta-Celebrations.json"}

    def test_all_categories_fail(self, pipeline_workspace):
        ws = pipeline_workspace
        patch_config(
            ws, fail_categories=["Health", "Celebrations", "Beauty and Wellness"]
        )
        assert classify(ws).returncode == 0
        r = generate(ws)
        assert r.returncode == 3
        assert not list((ws / "out").glob("delta-*.json"))

    def test_corrupt_delta_file(self, pipeline_workspace):
        ws = pipeline_workspace
        bad = ws / "out"
        bad.mkdir(exist_ok=True)
        (bad / "delta-broken.json").write_text("{not json")
        r = run_cli(
            "merge",
            "--config",
            str(ws / "config.json"),
            "--deltas",
            str(bad / "delta-broken.json"),
        )
        assert r.returncode == 5
        assert "delta-broken.json" in r.stdout + r.stderr

    def test_corrupt_snapshot(self, pipeline_workspace):
        ws = pipeline_workspace
        (ws / "work.json").write_bytes(b"garbage bytes\n")
        r = classify(ws)
        assert r.returncode == 5

    def test_missing_config(self, tmp_path):
        r = run_cli("classify", "--config", str(tmp_path / "absent.toml"))
        assert r.returncode == 2
        assert "not found" in r.stderr

    def test_unknown_config_key(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text('{"provder": "mock"}')
        r = run_cli("classify", "--config", str(path))
        assert r.returncode == 2
        assert "provder" in r.stderr

    def test_replay_provider_without_path(self, pipeline_workspace):
        ws = pipeline_workspace
        patch_config(ws, provider="replay")
        r = classify(ws)
        assert r.returncode == 2
        assert "replay_path" in r.stderr


class TestReviewCommands:
    def prepare(self, ws: Path) -> None:
        assert classify(ws).returncode == 0
        assert generate(ws).returncode == 0
        assert merge(ws).returncode == 0

    def test_export_then_apply(self, pipeline_workspace):
        ws = pipeline_workspace
        self.prepare(ws)
        r = run_cli(
            "review-export", "--config", str(ws / "config.json"), "--rate", "0.5"
        )
        assert r.returncode == 0, r.stderr
        samples = json.loads((ws / "out" / "review-samples.json").read_text())
        assert {s["subtree_root"] for s in samples["samples"]} == {
            "Beauty-and-Wellness",
            "Celebrations",
            "Health",
        }

        corrections = {
            "corrections": [
                {"node": "yoga", "add_parents": ["nutrition"], "reviewer": "r1"}
            ]
        }
        (ws / "fix.json").write_text(json.dumps(corrections))
        r = run_cli(
            "review-apply",
            "--config",
            str(ws / "config.json"),
            "--corrections",
            str(ws / "fix.json"),
        )
        assert r.returncode == 0, r.stderr
        updated = read_snapshot(ws / "work.json")
        assert updated.hierarchy.has_edge("nutrition", "yoga")
        assert updated.provenance_log[-1]["kind"] == "corrections"

    def test_apply_partial_failure(self, pipeline_workspace):
        ws = pipeline_workspace
        self.prepare(ws)
        corrections = {
            "corrections": [
                {"node": "ghost", "add_parents": ["love"]},
                {"node": "yoga", "add_parents": ["nutrition"]},
            ]
        }
        (ws / "fix.json").write_text(json.dumps(corrections))
        r = run_cli(
            "review-apply",
            "--config",
            str(ws / "config.json"),
            "--corrections",
            str(ws / "fix.json"),
        )
        assert r.returncode == 4
        assert "ghost" in r.stderr
        assert read_snapshot(ws / "work.json").hierarchy.has_edge("nutrition", "yoga")

    def test_apply_nothing_applies(self, pipeline_workspace):
        ws = pipeline_workspace
        self.prepare(ws)
        (ws / "fix.json").write_text(
            json.dumps({"corrections": [{"node": "ghost", "add_parents": ["love"]}]})
        )
        r = run_cli(
            "review-apply",
            "--config",
            str(ws / "config.json"),
            "--corrections",
            str(ws / "fix.json"),
        )
        assert r.returncode == 5

    def test_apply_malformed_file(self, pipeline_workspace):
        ws = pipeline_workspace
        (ws / "fix.json").write_text("[1, 2]")
        r = run_cli(
            "review-apply",
            "--config",
            str(ws / "config.json"),
            "--corrections",
            str(ws / "fix.json"),
        )
        assert r.returncode == 5
        assert "schema" in r.stderr


class TestFixtureCommand:
    def test_demo(self, tmp_path):
        r = run_cli("fixture", "demo", "--output-dir", str(tmp_path))
        assert r.returncode == 0, r.stderr
        snap = read_snapshot(tmp_path / "demo.json")
        assert len(snap.hierarchy) == 32
        work = read_snapshot(tmp_path / "work.json").hierarchy
        assert set(work.node_ids()) == set(snap.hierarchy.node_ids())
        assert work.num_edges() == 0
        categories = (tmp_path / "categories.txt").read_text().splitlines()
        assert categories == ["Beauty and Wellness", "Celebrations", "Health"]
        examples = json.loads((tmp_path / "examples.json").read_text())
        assert all({"label", "categories"} <= set(e) for e in examples)

    def test_gold_respects_size(self, tmp_path):
        r = run_cli(
            "fixture",
            "gold",
            "--output-dir",
            str(tmp_path),
            "--n-nodes",
            "75",
            "--depth",
            "4",
            "--seed",
            "3",
        )
        assert r.returncode == 0, r.stderr
        snap = read_snapshot(tmp_path / "gold.json")
        assert len(snap.hierarchy) == 75

    def test_benchmark_fixtures(self, tmp_path):
        r = run_cli("fixture", "colors-benchmark", "--output-dir", str(tmp_path))
        assert r.returncode == 0, r.stderr
        files = {p.name for p in tmp_path.glob("*.json")}
        assert {"colors-before.json", "colors-after.json"} <= files


def test_experiment_command(tmp_path):
    r = run_cli(
        "experiment",
        "--output-dir",
        str(tmp_path),
        "--epsilons",
        "0",
        "--seeds",
        "1",
        "--n-nodes",
        "40",
        "--depth",
        "3",
        "--output",
        str(tmp_path / "report.json"),
    )
    assert r.returncode == 0, r.stderr
    report = json.loads((tmp_path / "report.json").read_text())
    assert set(report["sweeps"]) == {"wrong_category", "spurious_parent", "drop_node"}
    for sweep in report["sweeps"].values():
        for strategy in ("one_shot", "cyclical"):
            assert sweep["strategies"][strategy]["0"]["overall"] == 1.0
    assert report["order_divergence"]["divergence_rate"] >= 0.0
    assert "edge accuracy" in r.stdout
