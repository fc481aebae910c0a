// Starts the core service once for the whole suite. The editor is a thin
// client: every semantic check in these tests round-trips through it.

import { ChildProcess, spawn } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";

export const URL_FILE = join(tmpdir(), "metacp-gde-test-service-url");

let service: ChildProcess | undefined;

export default async function setup(): Promise<() => void> {
  const repoRoot = fileURLToPath(new URL("../..", import.meta.url));
  const port = 20000 + Math.floor(Math.random() * 20000);
  service = spawn("python3", ["-m", "metacp", "serve", "--port", String(port)], {
    env: { ...process.env, PYTHONPATH: join(repoRoot, "src") },
    stdio: ["ignore", "pipe", "inherit"],
  });
  const baseUrl = `http://127.0.0.1:${port}`;
  const deadline = Date.now() + 20000;
  for (;;) {
    try {
      const response = await fetch(`${baseUrl}/samples`);
      if (response.status === 200) break;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) {
      service.kill();
      throw new Error("metacp service did not come up");
    }
    await new Promise((resolve) => setTimeout(resolve, 150));
  }
  writeFileSync(URL_FILE, baseUrl);
  return () => {
    service?.kill();
  };
}
