"""Shared fixtures: graphs, mock providers, and a CLI runner."""

from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import pytest

from hiergen import Hierarchy, MockOracle, MockOracleConfig, write_snapshot
from hiergen.fixtures import build_demo_graph, build_gold_taxonomy, detach_all


@pytest.fixture
def demo() -> Hierarchy:
    return build_demo_graph()


@pytest.fixture
def demo_detached(demo: Hierarchy) -> Hierarchy:
    return detach_all(demo)


@pytest.fixture
def gold_small() -> Hierarchy:
    return build_gold_taxonomy(60, 4, seed=1)


def make_mock(fixture: Hierarchy, **overrides) -> MockOracle:
    return MockOracle(MockOracleConfig(fixture=fixture, **overrides))


@pytest.fixture
def mock_demo(demo: Hierarchy) -> MockOracle:
    return make_mock(demo)


@pytest.fixture
def pipeline_workspace(tmp_path: Path, demo: Hierarchy):
    """Working snapshot (detached), gold fixture, categories, examples, config."""
    work = detach_all(demo)
    write_snapshot(work, tmp_path / "work.json")
    write_snapshot(demo, tmp_path / "gold.json")
    (tmp_path / "categories.txt").write_text(
        "".join(f"{demo.node(r).label}\n" for r in demo.l1_roots), encoding="utf-8"
    )
    (tmp_path / "examples.json").write_text(
        json.dumps(
            [
                {"label": "lipstick", "categories": ["Beauty and Wellness"]},
                {"label": "birthday card", "categories": ["Celebrations"]},
                {"label": "yoga", "categories": ["Health"]},
            ]
        ),
        encoding="utf-8",
    )
    config = {
        "snapshot_path": str(tmp_path / "work.json"),
        "categories_path": str(tmp_path / "categories.txt"),
        "examples_path": str(tmp_path / "examples.json"),
        "output_dir": str(tmp_path / "out"),
        "mock_fixture_path": str(tmp_path / "gold.json"),
    }
    (tmp_path / "config.json").write_text(json.dumps(config), encoding="utf-8")
    return tmp_path


def run_cli(*args: str, cwd: Path | None = None) -> subprocess.CompletedProcess:
    return subprocess.run(
        [sys.executable, "-m", "hiergen.cli", *args],
        capture_output=True,
        text=True,
        cwd=cwd,
    )
