"""Local review service.

Serves the hierarchy read API and accepts correction submissions from the
review UI.  Corrections are staged to files by default (pending a later
apply step); with ``live_apply`` they mutate the in-memory snapshot and the
snapshot file directly.

Readers always see a consistent graph: every mutation builds a new graph
object and swaps the reference under a lock, so requests that started
before an apply finish against the pre-apply state.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path

from fastapi import Body, FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware

from .config import PipelineConfig
from .ingest import (
    CorrectionSet,
    GraphSnapshot,
    apply_corrections,
    read_snapshot,
    write_snapshot,
)
from .stats import coverage_report, sample_for_review


class SnapshotState:
    """Current snapshot plus the single-writer lock for applies."""

    def __init__(self, config: PipelineConfig, snapshot: GraphSnapshot):
        self.config = config
        self.snapshot = snapshot
        self.lock = threading.Lock()
        self.staged_count = 0

    def stage(self, corrections: CorrectionSet) -> str:
        out = Path(self.config.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        with self.lock:
            self.staged_count += 1
            receipt = f"staged-{self.staged_count:04d}"
            path = out / f"corrections-{self.staged_count:04d}.json"
        path.write_text(
            json.dumps(corrections.to_dict(), sort_keys=True, indent=1) + "\n",
            encoding="utf-8",
        )
        return receipt

    def live_apply(self, corrections: CorrectionSet) -> str:
        with self.lock:
            self.snapshot.apply_corrections(corrections, timestamp=self.config.timestamp)
            receipt = f"applied-{len(self.snapshot.provenance_log):04d}"
            write_snapshot(self.snapshot, Path(self.config.snapshot_path))
        return receipt


def create_app(config: PipelineConfig, snapshot: GraphSnapshot | None = None) -> FastAPI:
    if snapshot is None:
        snapshot = read_snapshot(Path(config.snapshot_path))
    state = SnapshotState(config, snapshot)
    app = FastAPI(title="hiergen review service")
    app.state.hiergen = state
    # the review UI is a static page served from its own local port; only
    # localhost origins may read this API so that remote pages cannot
    app.add_middleware(
        CORSMiddleware,
        allow_origin_regex=r"^https?://(localhost|127\.0\.0\.1)(:\d+)?$",
        allow_methods=["GET", "POST"],
        allow_headers=["Content-Type"],
    )

    @app.get("/hierarchy/{l1}")
    def get_hierarchy(l1: str) -> dict:
        graph = state.snapshot.hierarchy
        if l1 not in graph.l1_roots:
            raise HTTPException(status_code=404, detail=f"{l1!r} is not an L1 category root")
        branch = graph.subgraph(l1)
        return {
            "root": l1,
            "nodes": [n.to_dict() for n in sorted(branch.nodes(), key=lambda n: n.id)],
            "edges": [e.to_dict() for e in sorted(branch.edges(), key=lambda e: (e.parent, e.child))],
        }

    @app.get("/node/{node_id}")
    def get_node(node_id: str) -> dict:
        graph = state.snapshot.hierarchy
        if not graph.has_node(node_id):
            raise HTTPException(status_code=404, detail=f"unknown node {node_id!r}")
        return {
            **graph.node(node_id).to_dict(),
            "parents": sorted(graph.parents_of(node_id)),
            "children": sorted(graph.children_of(node_id)),
            "level": graph.level_of(node_id),
        }

    @app.get("/stats")
    def get_stats() -> dict:
        graph = state.snapshot.hierarchy
        node_class = config.node_class or graph.class_filter
        return coverage_report(graph, graph, node_class).to_dict()

    @app.get("/samples")
    def get_samples(
        rate: float | None = Query(default=None, gt=0.0, le=1.0),
        seed: int | None = None,
    ) -> dict:
        graph = state.snapshot.hierarchy
        samples = sample_for_review(
            graph,
            rate=rate if rate is not None else config.sample_rate,
            seed=seed if seed is not None else config.seed,
        )
        return {"samples": [s.to_dict() for s in samples]}

    @app.post("/corrections")
    def post_corrections(payload: dict = Body(...)) -> dict:
        try:
            corrections = CorrectionSet.from_dict(payload)
        except (KeyError, TypeError, ValueError) as exc:
            raise HTTPException(status_code=422, detail={"failed": [{"node": "", "reason": str(exc)}]})
        if not corrections.corrections:
            raise HTTPException(
                status_code=422, detail={"failed": [{"node": "", "reason": "empty correction set"}]}
            )
        # all-or-nothing: a dry run on the current graph gates the whole batch
        _, report = apply_corrections(state.snapshot.hierarchy, corrections)
        if report.failed:
            raise HTTPException(status_code=422, detail={"failed": report.failed})
        if config.live_apply:
            receipt = state.live_apply(corrections)
            mode = "applied"
        else:
            receipt = state.stage(corrections)
            mode = "staged"
        return {"receipt": receipt, "mode": mode, "accepted": len(corrections.corrections)}

    return app
