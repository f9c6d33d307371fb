/**
 * End-to-end review loop against the real service.
 *
 * A demo snapshot is first broken through the live-apply path ("mom dad"
 * moved under "love"), then a reviewer session finds it, proposes the fix,
 * and submits.  The staged correction file is fed to the pipeline's apply
 * command and the stats command confirms the edge moved back.  A second
 * suite loads the full benchmark snapshot through the same API and checks
 * the windowed tree stays bounded at that scale.
 */

import { mkdtemp, readFile, writeFile } from "node:fs/promises";
import { tmpdir } from "node:os";
import path from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { CorrectionsRejected, ServiceClient } from "../src/api.js";
import { ReviewSession } from "../src/state.js";
import { allPathKeys, buildIndex, flattenVisible } from "../src/tree.js";
import { computeWindow } from "../src/virtual.js";
import { cli, startBackend, type Backend } from "./helpers/backend.js";

const LONG = 120_000;
const running: Backend[] = [];

afterAll(async () => {
  for (const b of running) await b.stop();
});

async function start(configPath: string, cwd: string): Promise<Backend> {
  const backend = await startBackend(configPath, cwd);
  running.push(backend);
  return backend;
}

describe.sequential("demo review loop", () => {
  let ws: string;

  beforeAll(async () => {
    ws = await mkdtemp(path.join(tmpdir(), "review-e2e-"));
    const made = await cli(["fixture", "demo", "--output-dir", "."], ws);
    expect(made.code).toBe(0);

    // break the snapshot through the service's own live-apply path, so the
    // reviewer below has something real to find
    await writeFile(
      path.join(ws, "config-live.json"),
      JSON.stringify({
        snapshot_path: "demo.json",
        output_dir: "out-live",
        node_class: "intent",
        live_apply: true,
      }),
    );
    const live = await start("config-live.json", ws);
    const setup = new ServiceClient(live.base);
    const receipt = await setup.submitCorrections({
      corrections: [
        {
          node: "mom-dad",
          remove_parents: ["marriage"],
          add_parents: ["love"],
          reviewer: "fixture-setup",
          timestamp: "2026-08-23T00:00:00Z",
        },
      ],
    });
    expect(receipt.mode).toBe("applied");
    await live.stop();

    await writeFile(
      path.join(ws, "config.json"),
      JSON.stringify({ snapshot_path: "demo.json", output_dir: "out", node_class: "intent" }),
    );
  }, LONG);

  it(
    "a reviewer finds the misplaced node, fixes it, and the pipeline applies the fix",
    async () => {
      const backend = await start("config.json", ws);
      const client = new ServiceClient(backend.base);

      // the broken state, as served
      const before = await client.stats();
      expect(before.per_level_counts).toEqual({ "1": 3, "2": 10, "3": 18, "4": 1 });
      expect(await client.categories()).toEqual([
        "Beauty-and-Wellness",
        "Celebrations",
        "Health",
      ]);
      const detail = await client.node("mom-dad");
      expect(detail.parents).toEqual(["love"]);

      // reviewer session: load the branch, flag the node, propose the fix
      const session = new ReviewSession();
      session.reviewer = "domain-expert";
      const payload = await client.hierarchy("Celebrations");
      session.loadCategory(buildIndex(payload));
      session.markOutcome("mom-dad", "misplaced");
      session.proposeMove("mom-dad", "love", "marriage");
      const set = session.toCorrectionSet("2026-08-23T12:00:00Z");
      expect(set).toEqual({
        corrections: [
          {
            node: "mom-dad",
            remove_parents: ["love"],
            add_parents: ["marriage"],
            reviewer: "domain-expert",
            timestamp: "2026-08-23T12:00:00Z",
          },
        ],
      });

      // a batch with a cycle-inducing sibling is rejected whole; the session
      // keeps everything and highlights the offender
      session.proposeMove("love", "Celebrations", "birthday");
      const mixed = session.toCorrectionSet("2026-08-23T12:00:00Z");
      const extra = {
        node: "love",
        remove_parents: [],
        add_parents: ["mom-dad"],
        reviewer: "domain-expert",
        timestamp: "2026-08-23T12:00:00Z",
      };
      const rejected = await client
        .submitCorrections({ corrections: [...mixed.corrections, extra] })
        .catch((e) => e);
      expect(rejected).toBeInstanceOf(CorrectionsRejected);
      expect(rejected.failed.map((f: { node: string }) => f.node)).toEqual(["love"]);
      session.applyRejection(rejected.failed);
      expect(session.pendingCount).toBe(2);
      expect(session.highlights.get("love")).toContain("cycle");
      session.discardNode("love");

      // clean resubmit is staged and lands on disk
      const accepted = await client.submitCorrections(session.toCorrectionSet("2026-08-23T12:00:00Z"));
      expect(accepted).toEqual({ receipt: "staged-0001", mode: "staged", accepted: 1 });
      session.applySuccess(accepted.receipt);
      expect(session.pendingCount).toBe(0);
      const staged = JSON.parse(
        await readFile(path.join(ws, "out", "corrections-0001.json"), "utf-8"),
      );
      expect(staged).toEqual(set);
      await backend.stop();

      // pipeline applies the staged file; stats now shows the edge moved
      const applied = await cli(
        ["review-apply", "--config", "config.json", "--corrections", "out/corrections-0001.json"],
        ws,
      );
      expect(applied.code).toBe(0);
      const stats = await cli(
        ["stats", "--config", "config.json", "--json", "report.json"],
        ws,
      );
      expect(stats.code).toBe(0);
      const report = JSON.parse(await readFile(path.join(ws, "report.json"), "utf-8"));
      expect(report.per_level_counts).toEqual({ "1": 3, "2": 10, "3": 17, "4": 2 });

      // and the service agrees once restarted on the corrected snapshot
      const after = await start("config.json", ws);
      const fixed = await new ServiceClient(after.base).node("mom-dad");
      expect(fixed.parents).toEqual(["marriage"]);
      expect(fixed.level).toBe(4);
      await after.stop();
    },
    LONG,
  );
});

describe.sequential("benchmark-scale browsing", () => {
  let ws: string;

  beforeAll(async () => {
    ws = await mkdtemp(path.join(tmpdir(), "review-bench-"));
    const made = await cli(["fixture", "intents-benchmark", "--output-dir", "."], ws);
    expect(made.code).toBe(0);
    await writeFile(
      path.join(ws, "config.json"),
      JSON.stringify({
        snapshot_path: "intents-after.json",
        output_dir: "out",
        node_class: "intent",
      }),
    );
  }, LONG);

  it(
    "the full intents snapshot loads through the API and stays navigable",
    async () => {
      const backend = await start("config.json", ws);
      const client = new ServiceClient(backend.base);

      const stats = await client.stats();
      expect(stats.total_nodes).toBe(12385);
      const categories = await client.categories();
      expect(categories).toHaveLength(25);

      // every branch arrives, and together they cover the whole hierarchy
      const union = new Set<string>();
      let largest: ReturnType<typeof buildIndex> | null = null;
      for (const cat of categories) {
        const payload = await client.hierarchy(cat);
        const index = buildIndex(payload);
        for (const id of index.nodes.keys()) union.add(id);
        if (!largest || index.nodes.size > largest.nodes.size) largest = index;
      }
      expect(union.size).toBe(stats.hierarchy_node_count);
      expect(largest!.nodes.size).toBeGreaterThan(300);

      // fully expanded, the biggest branch still renders through a window
      const session = new ReviewSession();
      session.loadCategory(largest!);
      const started = Date.now();
      session.expanded = allPathKeys(largest!);
      const rows = flattenVisible(largest!, session.expanded);
      expect(rows.length).toBeGreaterThanOrEqual(largest!.nodes.size);
      const cap = Math.ceil(480 / 24) + 1 + 2 * 10;
      for (const top of [0, (rows.length * 24) / 2, rows.length * 24]) {
        const win = computeWindow(rows.length, 24, top, 480, 10);
        expect(win.end - win.start).toBeLessThanOrEqual(cap);
      }
      expect(Date.now() - started).toBeLessThan(1500);

      await backend.stop();
    },
    LONG,
  );
});
