import { execFileSync } from "node:child_process";
import { readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";

import { Application, Assignment, Term } from "../src/psv.js";
import { ServiceClient } from "../src/service.js";

const URL_FILE = join(tmpdir(), "metacp-gde-test-service-url");

export function serviceClient(): ServiceClient {
  return new ServiceClient(readFileSync(URL_FILE, "utf-8").trim());
}

export const repoRoot = fileURLToPath(new URL("../..", import.meta.url));

export function sampleText(name: string): string {
  return readFileSync(join(repoRoot, "src", "metacp", "samples", `${name}.psv`), "utf-8");
}

export function runCli(args: string[]): Buffer {
  return execFileSync("python3", ["-m", "metacp", ...args], {
    env: { ...process.env, PYTHONPATH: join(repoRoot, "src") },
  });
}

// term shorthands for test scripts
export function v(ident: string): Term {
  return { ident };
}

export function app(fn: string, ...args: (Term | string)[]): Application {
  return {
    function: fn,
    args: args.map((arg) => (typeof arg === "string" ? { ident: arg } : arg)),
  };
}

export function det(target: string, source: Term): Assignment {
  return { target, mode: "deterministic", source };
}

export function prob(target: string, set: string): Assignment {
  return { target, mode: "probabilistic", source: { sampleFrom: set } };
}
