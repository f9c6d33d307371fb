/**
 * Harness for the end-to-end suite: starts the actual review service (the
 * Python package's `serve` command) on a free local port and shells out to
 * the same package's CLI for fixture generation and the apply step.  Only
 * published interfaces are touched: the HTTP API, the CLI, and the on-disk
 * file formats.
 */

import { execFile, spawn, type ChildProcess } from "node:child_process";
import net from "node:net";

export interface Backend {
  base: string;
  port: number;
  stop(): Promise<void>;
}

export async function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const srv = net.createServer();
    srv.on("error", reject);
    srv.listen(0, "127.0.0.1", () => {
      const { port } = srv.address() as net.AddressInfo;
      srv.close(() => resolve(port));
    });
  });
}

export async function startBackend(configPath: string, cwd: string): Promise<Backend> {
  const port = await freePort();
  const child: ChildProcess = spawn(
    "python3",
    ["-m", "hiergen.cli", "serve", "--config", configPath, "--port", String(port)],
    { cwd, stdio: ["ignore", "pipe", "pipe"] },
  );
  let output = "";
  child.stdout?.on("data", (d) => (output += d));
  child.stderr?.on("data", (d) => (output += d));
  let exited = false;
  child.on("exit", () => (exited = true));

  const base = `http://127.0.0.1:${port}`;
  const deadline = Date.now() + 30_000;
  for (;;) {
    if (exited) throw new Error(`service exited during startup:\n${output}`);
    try {
      const res = await fetch(`${base}/stats`);
      if (res.ok) break;
    } catch {
      // not listening yet
    }
    if (Date.now() > deadline) {
      child.kill("SIGKILL");
      throw new Error(`service did not come up within 30s:\n${output}`);
    }
    await sleep(200);
  }

  return {
    base,
    port,
    stop: async () => {
      if (exited) return;
      child.kill("SIGTERM");
      const killAt = Date.now() + 5_000;
      while (!exited) {
        if (Date.now() > killAt) {
          child.kill("SIGKILL");
          break;
        }
        await sleep(100);
      }
    },
  };
}

export interface CliResult {
  code: number;
  stdout: string;
  stderr: string;
}

export function cli(args: string[], cwd: string): Promise<CliResult> {
  return new Promise((resolve) => {
    execFile(
      "python3",
      ["-m", "hiergen.cli", ...args],
      { cwd, maxBuffer: 64 * 1024 * 1024 },
      (err, stdout, stderr) => {
        const code = err ? ((err as { code?: number }).code ?? 1) : 0;
        resolve({ code: typeof code === "number" ? code : 1, stdout, stderr });
      },
    );
  });
}

function sleep(ms: number): Promise<void> {
  return new Promise((r) => setTimeout(r, ms));
}
