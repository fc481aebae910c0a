// The editor's working state. A Design wraps the protocol model under
// construction together with the toolbox inventory and the latest
// validation result; the knowledge boxes render exactly what the core
// computed (the client never recomputes knowledge or types itself).

import {
  Application,
  Assignment,
  PsvModel,
  emptyModel,
  parsePsv,
  serializePsv,
} from "./psv.js";
import { Diagnostic, ServiceClient, TraceLine } from "./service.js";

export const PARTIES = ["Alice", "Bob"] as const;

export interface Design {
  model: PsvModel;
  // applications and statements built in the toolbox, not yet dropped
  toolboxApplications: Application[];
  toolboxStatements: Assignment[];
  // latest validation of the serialized model
  lastDiagnostics: Diagnostic[];
  lastTrace: TraceLine[];
}

export function newDesign(ident: string): Design {
  const model = emptyModel(ident);
  // the editor supports exactly two parties
  model.entities = PARTIES.map((party) => ({ ident: party }));
  return {
    model,
    toolboxApplications: [],
    toolboxStatements: [],
    lastDiagnostics: [],
    lastTrace: [],
  };
}

export function cloneDesign(design: Design): Design {
  return structuredClone(design);
}

export function designToXml(design: Design): string {
  return serializePsv(design.model);
}

// Opens an existing PSV document; the core recomputes diagnostics and the
// knowledge trace so the boxes render fresh.
export async function loadDesign(xml: string, service: ServiceClient): Promise<Design> {
  const model = parsePsv(xml);
  const validation = await service.validate(serializePsv(model));
  return {
    model,
    toolboxApplications: [],
    toolboxStatements: [],
    lastDiagnostics: validation.diagnostics,
    lastTrace: validation.trace,
  };
}

// Diagnostics that mean "this content is wrong" and bounce a drop on the
// spot: reference and typing violations. Knowledge-flow errors are not in
// this set on purpose: statements legitimately land in their boxes before
// the initial knowledge is dragged in (the canonical workflow ends with
// the knowledge step), so they only gate saving, not editing.
const DROP_BLOCKING_CODES = new Set([
  "duplicate-id",
  "forward-reference",
  "undeclared-set",
  "undeclared-function",
  "undeclared-variable",
  "undeclared-entity",
  "arity-mismatch",
  "unquantified-variable",
  "self-message",
  "duplicate-knowledge-var",
  "duplicate-finalise",
  "mode-source-mismatch",
  "assignment-to-constant",
  "receive-into-constant",
  "type-mismatch",
  "equation-type-mismatch",
  "assignment-type-mismatch",
  "sample-set-mismatch",
  "payload-type-mismatch",
  "unsupported-relation",
  "bad-identifier",
]);

export function isBlocking(diagnostic: Diagnostic): boolean {
  return DROP_BLOCKING_CODES.has(diagnostic.code);
}

export function blockingDelta(before: Diagnostic[], after: Diagnostic[]): Diagnostic[] {
  const seen = new Set(before.map((d) => `${d.path} ${d.code}: ${d.message}`));
  return after.filter(
    (d) => isBlocking(d) && !seen.has(`${d.path} ${d.code}: ${d.message}`),
  );
}

// ---------------------------------------------------------------------------
// knowledge boxes

// Knowledge of one entity entering a message: its latest snapshot from any
// earlier protocol step.
export function knowledgeBefore(
  trace: TraceLine[],
  entity: string,
  messageIndex: number,
): string[] {
  let current: string[] = [];
  for (const line of trace) {
    if (line.entity !== entity) continue;
    if (line.label === "initial") {
      current = line.vars;
      continue;
    }
    const step = /^after-(?:pre|recv|post)\((\d+)\)$/.exec(line.label);
    if (step && Number(step[1]) < messageIndex) current = line.vars;
  }
  return current;
}

export function finalKnowledge(trace: TraceLine[], entity: string): string[] {
  let current: string[] = [];
  for (const line of trace) {
    if (line.entity === entity) current = line.vars;
  }
  return current;
}

// ---------------------------------------------------------------------------
// saving

export class IncompleteDesignError extends Error {
  constructor(readonly offending: string[]) {
    super(
      offending.length
        ? `design is incomplete: ${offending.join("; ")}`
        : "design is incomplete: not yet validated",
    );
  }
}

// Canonical PSV bytes of a complete design. Message knowledge boxes are
// embedded as annotations, exactly as the core computed them, so the saved
// file round-trips through the core toolchain warning-free.
export function toPsv(design: Design): string {
  const blocking = design.lastDiagnostics.filter((d) => d.severity === "error");
  if (blocking.length > 0 || design.lastTrace.length === 0) {
    throw new IncompleteDesignError(blocking.map((d) => `${d.path} ${d.code}`));
  }
  const model = structuredClone(design.model);
  model.messages.forEach((message, index) => {
    message.knowledge = model.entities
      .map((entity) => ({
        owner: entity.ident,
        vars: knowledgeBefore(design.lastTrace, entity.ident, index + 1).map((ident) => ({
          ident,
        })),
      }))
      .filter((knowledge) => knowledge.vars.length > 0);
  });
  return serializePsv(model);
}
