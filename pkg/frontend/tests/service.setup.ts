/**
 * Spawns the registry service for the duration of the test run and records
 * its base URL in tests/.service.json; tests load that file.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

const STATE_FILE = join(__dirname, ".service.json");

let child: ChildProcess | null = null;
let dataDir: string | null = null;

async function waitForPort(stderrChunks: string[]): Promise<number> {
  const deadline = Date.now() + 30000;
  while (Date.now() < deadline) {
    const text = stderrChunks.join("");
    const match = text.match(/listening on port (\d+)/);
    if (match) {
      return Number(match[1]);
    }
    if (child && child.exitCode !== null) {
      throw new Error(`service exited early:\n${text}`);
    }
    await new Promise((resolve) => setTimeout(resolve, 50));
  }
  throw new Error("service did not report its port in time");
}

export async function setup(): Promise<void> {
  dataDir = mkdtempSync(join(tmpdir(), "bayescloud-e2e-"));
  const env = { ...process.env };
  delete env.BAYESCLOUD_PORT; // the test always wants an ephemeral port
  delete env.BAYESCLOUD_DATA_DIR;
  child = spawn(
    "python3",
    ["-m", "bayescloud.cli", "serve", "--port", "0", "--data-dir", dataDir],
    { env, stdio: ["ignore", "ignore", "pipe"] },
  );
  const stderrChunks: string[] = [];
  child.stderr!.on("data", (chunk: Buffer) => stderrChunks.push(chunk.toString()));
  const port = await waitForPort(stderrChunks);
  writeFileSync(STATE_FILE, JSON.stringify({ baseUrl: `http://127.0.0.1:${port}` }));
}

export async function teardown(): Promise<void> {
  if (child) {
    child.kill("SIGTERM");
    child = null;
  }
  if (dataDir) {
    rmSync(dataDir, { recursive: true, force: true });
    dataDir = null;
  }
  rmSync(STATE_FILE, { force: true });
}
