// Client for the local validate/export service. All semantic intelligence
// (typing, knowledge) lives in the core behind these endpoints; the editor
// only renders what comes back.

export interface Diagnostic {
  severity: "error" | "warning";
  path: string;
  code: string;
  message: string;
}

export interface TraceLine {
  entity: string;
  label: string;
  vars: string[];
}

export interface ValidationResult {
  status: number;
  diagnostics: Diagnostic[];
  trace: TraceLine[];
}

export class ServiceUnreachable extends Error {
  constructor(cause: unknown) {
    super(`metacp service unreachable: ${String(cause)}`);
  }
}

const DIAGNOSTIC_RE = /^(error|warning) (\S+) ([\w-]+): (.*)$/;
const TRACE_RE = /^trace (\S+) (\S+) (\S+)$/;

export function parseDiagnostics(body: string): { diagnostics: Diagnostic[]; trace: TraceLine[] } {
  const diagnostics: Diagnostic[] = [];
  const trace: TraceLine[] = [];
  for (const line of body.split("\n")) {
    if (!line.trim()) continue;
    const diag = DIAGNOSTIC_RE.exec(line);
    if (diag) {
      diagnostics.push({
        severity: diag[1] as Diagnostic["severity"],
        path: diag[2]!,
        code: diag[3]!,
        message: diag[4]!,
      });
      continue;
    }
    const traced = TRACE_RE.exec(line);
    if (traced) {
      trace.push({
        entity: traced[1]!,
        label: traced[2]!,
        vars: traced[3] === "-" ? [] : traced[3]!.split(","),
      });
    }
  }
  return { diagnostics, trace };
}

export class ServiceClient {
  constructor(readonly baseUrl: string) {}

  private async post(path: string, body: string): Promise<Response> {
    try {
      return await fetch(this.baseUrl + path, {
        method: "POST",
        headers: { "Content-Type": "application/xml" },
        body,
      });
    } catch (failure) {
      throw new ServiceUnreachable(failure);
    }
  }

  async validate(psv: string, withTrace = true): Promise<ValidationResult> {
    const response = await this.post(withTrace ? "/validate?trace=1" : "/validate", psv);
    const parsed = parseDiagnostics(await response.text());
    return { status: response.status, ...parsed };
  }

  async exportModel(psv: string, target: "proverif" | "tamarin" | "cpp"): Promise<
    { ok: true; artifact: Uint8Array } | { ok: false; status: number; diagnostics: Diagnostic[] }
  > {
    const response = await this.post(`/export?target=${target}`, psv);
    if (response.status === 200) {
      return { ok: true, artifact: new Uint8Array(await response.arrayBuffer()) };
    }
    const { diagnostics } = parseDiagnostics(await response.text());
    return { ok: false, status: response.status, diagnostics };
  }

  async samples(): Promise<string[]> {
    try {
      const response = await fetch(this.baseUrl + "/samples");
      return (await response.text()).trim().split("\n");
    } catch (failure) {
      throw new ServiceUnreachable(failure);
    }
  }

  async sampleContent(name: string): Promise<string> {
    try {
      const response = await fetch(`${this.baseUrl}/samples/${name}`);
      if (response.status !== 200) throw new Error(`unknown sample ${name}`);
      return await response.text();
    } catch (failure) {
      throw new ServiceUnreachable(failure);
    }
  }
}

// ---------------------------------------------------------------------------
// anchoring diagnostics to canvas elements

export type CanvasAnchor =
  | { kind: "message"; index: number; box: "knowledge" | "pre" | "send" | "channel" | "receive" | "post" | "message" }
  | { kind: "entity"; index: number }
  | { kind: "declaration"; element: string; index: number }
  | { kind: "finalise"; index: number }
  | { kind: "correctness"; index: number }
  | { kind: "document" };

const MESSAGE_PART_RE = /^\/model\/protocol\/message\[(\d+)\](?:\/(knowledge|pre|event|channel|post)(?:\[(\d+)\])?)?/;

export function anchorFor(path: string): CanvasAnchor {
  const message = MESSAGE_PART_RE.exec(path);
  if (message) {
    const index = Number(message[1]);
    const part = message[2];
    if (!part) return { kind: "message", index, box: "message" };
    if (part === "event") {
      return { kind: "message", index, box: message[3] === "1" ? "send" : "receive" };
    }
    return { kind: "message", index, box: part as "knowledge" | "pre" | "channel" | "post" };
  }
  const entity = /^\/model\/protocol\/entity\[(\d+)\]/.exec(path);
  if (entity) return { kind: "entity", index: Number(entity[1]) };
  const finalise = /^\/model\/protocol\/finalise\[(\d+)\]/.exec(path);
  if (finalise) return { kind: "finalise", index: Number(finalise[1]) };
  const correctness = /^\/model\/protocol\/correctness\[(\d+)\]/.exec(path);
  if (correctness) return { kind: "correctness", index: Number(correctness[1]) };
  const declaration = /^\/model\/(set|function|declaration|equation)\[(\d+)\]/.exec(path);
  if (declaration) {
    return { kind: "declaration", element: declaration[1]!, index: Number(declaration[2]) };
  }
  return { kind: "document" };
}
