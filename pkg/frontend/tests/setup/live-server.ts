// Boots the trace server once for the whole run: writes two fixture
// traces, bundles them through the CLI, serves them on a free port, and
// hands the URL and dataset ids to the test workers. The dense fixture
// packs 1,000 ten-tick intervals onto one location so that at any sane
// viewport width every pixel holds several intervals.

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { createServer } from "node:net";
import type { TestProject } from "vitest/node";

// Two locations; a 100-tick root with two overlapping 30/40-tick
// children, one per location.
const THREE_TRACE = `L 0 0 0
L 1 0 1
E 0 0 1 - run
E 10 0 2 1 loop
X 40 0 2
E 20 1 3 1 loop
X 60 1 3
X 100 0 1
`;

function denseTrace(): { text: string; span: number } {
  const events: Array<[number, string]> = [];
  for (let i = 0; i < 1000; i++) {
    const enter = i * 100;
    events.push([enter, `E ${enter} 0 ${i + 1} - burst`]);
    events.push([enter + 10, `X ${enter + 10} 0 ${i + 1}`]);
  }
  const span = 999 * 100 + 10;
  // Linear counter: rate 2.5 everywhere, for the box plot views.
  for (const t of [0, span]) {
    events.push([t, `C ${t} 0 flux ${(2.5 * t).toFixed(1)}`]);
  }
  events.sort((a, b) => a[0] - b[0]);
  const text = `L 0 0 0\n${events.map((e) => e[1]).join("\n")}\n`;
  return { text, span };
}

function bundle(tracePath: string, label: string, dataDir: string): string {
  const out = spawnSync(
    "python3",
    ["-m", "tracescope.cli", "bundle", tracePath, "--label", label, "--data-dir", dataDir],
    { encoding: "utf8" },
  );
  if (out.status !== 0) {
    throw new Error(`bundle of ${label} failed: ${out.stderr}`);
  }
  const line = out.stdout.trim().split("\n").pop() ?? "";
  if (!line.startsWith("dataset ")) {
    throw new Error(`unexpected bundle output: ${out.stdout}`);
  }
  return line.split(/\s+/)[1];
}

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const probe = createServer();
    probe.once("error", reject);
    probe.listen(0, "127.0.0.1", () => {
      const addr = probe.address();
      if (addr === null || typeof addr === "string") {
        reject(new Error("could not allocate a port"));
        return;
      }
      const { port } = addr;
      probe.close(() => resolve(port));
    });
  });
}

export default async function setup(project: TestProject): Promise<() => void> {
  const workDir = mkdtempSync(join(tmpdir(), "traceview-live-"));
  const dataDir = join(workDir, "data");

  const threePath = join(workDir, "three.trace");
  writeFileSync(threePath, THREE_TRACE);
  const dense = denseTrace();
  const densePath = join(workDir, "dense.trace");
  writeFileSync(densePath, dense.text);

  const threeId = bundle(threePath, "three", dataDir);
  const denseId = bundle(densePath, "dense", dataDir);

  const port = await freePort();
  const proc: ChildProcess = spawn(
    "python3",
    ["-m", "tracescope.cli", "serve", "--port", String(port), "--data-dir", dataDir],
    { stdio: "ignore" },
  );
  const baseUrl = `http://127.0.0.1:${port}`;

  const deadline = Date.now() + 30_000;
  for (;;) {
    try {
      const resp = await fetch(`${baseUrl}/api/v1/datasets`);
      if (resp.ok) break;
    } catch {
      // Server not accepting connections yet.
    }
    if (proc.exitCode !== null) {
      throw new Error(`server exited early with code ${proc.exitCode}`);
    }
    if (Date.now() > deadline) {
      proc.kill();
      throw new Error("server did not come up within 30s");
    }
    await new Promise((resolve) => setTimeout(resolve, 100));
  }

  project.provide("baseUrl", baseUrl);
  project.provide("threeId", threeId);
  project.provide("denseId", denseId);
  project.provide("denseSpan", dense.span);

  return () => {
    proc.kill();
    rmSync(workDir, { recursive: true, force: true });
  };
}

declare module "vitest" {
  export interface ProvidedContext {
    baseUrl: string;
    threeId: string;
    denseId: string;
    denseSpan: number;
  }
}
