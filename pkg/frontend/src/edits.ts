// Edits are the only way the editor mutates a design. Every edit builds a
// candidate model, has the core service validate it, and commits only when
// the candidate introduces no new blocking diagnostics; type-incompatible
// drops are therefore rejected before any state mutation. Applications and
// statements built in the toolbox are type-checked through a probe
// document (the candidate model plus a throwaway equation wrapping the
// term), which keeps every typing rule in the core.

import {
  Application,
  Assignment,
  EquationDecl,
  PsvModel,
  Term,
  freeVariables,
  isApplication,
  samplesSet,
  serializePsv,
} from "./psv.js";
import {
  Design,
  blockingDelta,
  cloneDesign,
} from "./design.js";
import { Diagnostic, ServiceClient, ServiceUnreachable, TraceLine } from "./service.js";

export type StatementBox =
  | { scope: "pre" | "post"; message: number } // 1-based message index
  | { scope: "finalise"; entity: string };

export type VariableTarget =
  | { kind: "event"; message: number; event: "send" | "receive" }
  | { kind: "initial-knowledge"; entity: string };

export type DeleteTarget =
  | { kind: "message"; index: number }
  | { kind: "statement"; box: StatementBox; index: number }
  | { kind: "payload-variable"; target: VariableTarget; ident: string }
  | { kind: "declaration"; element: "set" | "function" | "variable" | "equation"; ident: string }
  | { kind: "toolbox-application"; index: number }
  | { kind: "toolbox-statement"; index: number }
  | { kind: "correctness"; index: number };

export type Edit =
  | { kind: "add-set"; ident: string; hint?: string; elementSets?: string[] }
  | { kind: "add-function"; ident: string; paramSets: string[]; resultSet: string; hint?: string }
  | { kind: "add-variable"; ident: string; set: string; modifier?: string; scope?: string; hint?: string }
  | { kind: "add-equation"; ident: string; quantified: string[]; lhs: Application; rhs: Term }
  | { kind: "create-application"; application: Application }
  | { kind: "create-statement"; statement: Assignment }
  | { kind: "add-message"; from: string; to: string }
  | { kind: "drop-statement"; box: StatementBox; statement: Assignment }
  | { kind: "drop-variable"; target: VariableTarget; ident: string }
  | { kind: "add-final-op"; entity: string; statement: Assignment }
  | { kind: "set-correctness"; relation: Application }
  | { kind: "delete"; target: DeleteTarget };

export type ApplyResult =
  | { ok: true; design: Design }
  | { ok: false; code: "rejected-drop" | "unknown-reference" | "service-unreachable"; reason: string; diagnostics: Diagnostic[] };

function rejected(
  code: "rejected-drop" | "unknown-reference" | "service-unreachable",
  reason: string,
  diagnostics: Diagnostic[] = [],
): ApplyResult {
  return { ok: false, code, reason, diagnostics };
}

// -- reference checks (existence only; semantics stay in the core) ----------

function knowsVariable(model: PsvModel, ident: string): boolean {
  return model.variables.some((v) => v.ident === ident);
}

function knowsEntity(model: PsvModel, ident: string): boolean {
  return model.entities.some((e) => e.ident === ident);
}

function referencedIdents(term: Term): string[] {
  return freeVariables(term);
}

function statementReferences(statement: Assignment): string[] {
  const refs = [statement.target];
  if (!samplesSet(statement.source)) refs.push(...referencedIdents(statement.source));
  return refs;
}

function checkReferences(design: Design, edit: Edit): string | null {
  const model = design.model;
  switch (edit.kind) {
    case "create-application":
    case "set-correctness": {
      const app = edit.kind === "create-application" ? edit.application : edit.relation;
      if (!model.functions.some((f) => f.ident === app.function)) {
        return `function ${app.function} is not declared`;
      }
      for (const ident of referencedIdents(app)) {
        if (!knowsVariable(model, ident)) return `variable ${ident} is not declared`;
      }
      return null;
    }
    case "create-statement":
    case "add-final-op":
    case "drop-statement": {
      for (const ident of statementReferences(edit.statement)) {
        if (!knowsVariable(model, ident)) return `variable ${ident} is not declared`;
      }
      if (edit.kind === "drop-statement" && edit.box.scope !== "finalise") {
        if (edit.box.message < 1 || edit.box.message > model.messages.length) {
          return `message ${edit.box.message} does not exist`;
        }
      }
      return null;
    }
    case "add-message":
      if (!knowsEntity(model, edit.from)) return `entity ${edit.from} is not declared`;
      if (!knowsEntity(model, edit.to)) return `entity ${edit.to} is not declared`;
      return null;
    case "drop-variable":
      if (!knowsVariable(model, edit.ident)) return `variable ${edit.ident} is not declared`;
      if (edit.target.kind === "event") {
        if (edit.target.message < 1 || edit.target.message > model.messages.length) {
          return `message ${edit.target.message} does not exist`;
        }
      } else if (!knowsEntity(model, edit.target.entity)) {
        return `entity ${edit.target.entity} is not declared`;
      }
      return null;
    default:
      return null;
  }
}

// -- candidate construction --------------------------------------------------

function applyToModel(model: PsvModel, edit: Edit): void {
  switch (edit.kind) {
    case "add-set":
      model.sets.push({ ident: edit.ident, elementSets: edit.elementSets ?? [], hint: edit.hint });
      break;
    case "add-function":
      model.functions.push({
        ident: edit.ident,
        arity: edit.paramSets.length,
        paramSets: edit.paramSets,
        resultSet: edit.resultSet,
        hint: edit.hint,
      });
      break;
    case "add-variable":
      model.variables.push({
        ident: edit.ident,
        modifier: edit.modifier,
        set: edit.set,
        scope: edit.scope,
        hint: edit.hint,
      });
      break;
    case "add-equation":
      model.equations.push({
        ident: edit.ident,
        quantified: edit.quantified.map((ident) => ({ ident })),
        lhs: edit.lhs,
        rhs: edit.rhs,
      });
      break;
    case "add-message":
      model.messages.push({
        from: edit.from,
        to: edit.to,
        knowledge: [],
        pre: [],
        send: [],
        channel: null,
        recv: [],
        post: [],
      });
      break;
    case "drop-statement": {
      if (edit.box.scope === "finalise") {
        addFinalStatement(model, edit.box.entity, edit.statement);
      } else {
        const message = model.messages[edit.box.message - 1]!;
        message[edit.box.scope].push(edit.statement);
      }
      break;
    }
    case "add-final-op":
      addFinalStatement(model, edit.entity, edit.statement);
      break;
    case "drop-variable": {
      const where = edit.target;
      if (where.kind === "event") {
        const message = model.messages[where.message - 1]!;
        (where.event === "send" ? message.send : message.recv).push({ ident: edit.ident });
      } else {
        const entity = model.entities.find((e) => e.ident === where.entity)!;
        if (!entity.knowledge) entity.knowledge = { owner: entity.ident, vars: [] };
        entity.knowledge.vars.push({ ident: edit.ident });
      }
      break;
    }
    case "set-correctness":
      model.properties = [edit.relation];
      break;
    case "delete":
      applyDelete(model, edit.target);
      break;
    case "create-application":
    case "create-statement":
      break; // toolbox-only; nothing enters the model
  }
}

function addFinalStatement(model: PsvModel, entity: string, statement: Assignment): void {
  const existing = model.finalise.find((fin) => fin.entity === entity);
  if (existing) {
    existing.statements.push(statement);
  } else {
    model.finalise.push({ entity, statements: [statement] });
  }
}

function applyDelete(model: PsvModel, target: DeleteTarget): void {
  switch (target.kind) {
    case "message":
      model.messages.splice(target.index - 1, 1);
      break;
    case "statement": {
      const box = target.box;
      if (box.scope === "finalise") {
        const fin = model.finalise.find((f) => f.entity === box.entity);
        fin?.statements.splice(target.index, 1);
      } else {
        model.messages[box.message - 1]?.[box.scope].splice(target.index, 1);
      }
      break;
    }
    case "payload-variable": {
      const where = target.target;
      if (where.kind === "event") {
        const message = model.messages[where.message - 1];
        if (message) {
          const payload = where.event === "send" ? message.send : message.recv;
          const at = payload.findIndex((v) => v.ident === target.ident);
          if (at >= 0) payload.splice(at, 1);
        }
      } else {
        const entity = model.entities.find((e) => e.ident === where.entity);
        if (entity?.knowledge) {
          entity.knowledge.vars = entity.knowledge.vars.filter((v) => v.ident !== target.ident);
          if (entity.knowledge.vars.length === 0) delete entity.knowledge;
        }
      }
      break;
    }
    case "declaration": {
      const pools = {
        set: model.sets,
        function: model.functions,
        variable: model.variables,
        equation: model.equations,
      } as const;
      const pool = pools[target.element] as { ident: string }[];
      const at = pool.findIndex((declaration) => declaration.ident === target.ident);
      if (at >= 0) pool.splice(at, 1);
      break;
    }
    case "correctness":
      model.properties.splice(target.index - 1, 1);
      break;
    case "toolbox-application":
    case "toolbox-statement":
      break; // handled on the design, not the model
  }
}

// A toolbox term enters no process, so it is type-checked through a probe:
// a throwaway equation whose sides are the term (or term = target for a
// deterministic statement). The core's equation type checking then reports
// exactly the violations a later drop would hit.
function probeEquation(model: PsvModel, lhs: Application, rhs: Term): EquationDecl {
  let ident = "probe_check";
  let n = 0;
  while (model.equations.some((eq) => eq.ident === ident)) {
    n += 1;
    ident = `probe_check_${n}`;
  }
  const quantified = new Set([...freeVariables(lhs), ...freeVariables(rhs)]);
  return { ident, quantified: [...quantified].map((v) => ({ ident: v })), lhs, rhs };
}

function candidateXml(design: Design, edit: Edit): string {
  const model = structuredClone(design.model);
  if (edit.kind === "create-application") {
    model.equations.push(probeEquation(model, edit.application, edit.application));
  } else if (edit.kind === "create-statement") {
    if (!samplesSet(edit.statement.source) && isApplication(edit.statement.source)) {
      model.equations.push(
        probeEquation(model, edit.statement.source, { ident: edit.statement.target }),
      );
    }
    // probabilistic statements and aliases are fully checked on drop
  } else {
    applyToModel(model, edit);
  }
  return serializePsv(model);
}

// -- the edit pipeline -------------------------------------------------------

export async function applyEdit(
  design: Design,
  edit: Edit,
  service: ServiceClient,
): Promise<ApplyResult> {
  const missing = checkReferences(design, edit);
  if (missing !== null) {
    return rejected("unknown-reference", missing);
  }

  let validation;
  try {
    validation = await service.validate(candidateXml(design, edit));
  } catch (failure) {
    if (failure instanceof ServiceUnreachable) {
      return rejected("service-unreachable", failure.message);
    }
    throw failure;
  }

  const introduced = blockingDelta(design.lastDiagnostics, validation.diagnostics);
  if (introduced.length > 0) {
    const first = introduced[0]!;
    return rejected(
      "rejected-drop",
      `${first.code} at ${first.path}: ${first.message}`,
      introduced,
    );
  }

  const next = cloneDesign(design);
  applyToModel(next.model, edit);
  if (edit.kind === "create-application") {
    next.toolboxApplications.push(edit.application);
  } else if (edit.kind === "create-statement") {
    next.toolboxStatements.push(edit.statement);
  } else if (edit.kind === "delete" && edit.target.kind === "toolbox-application") {
    next.toolboxApplications.splice(edit.target.index, 1);
  } else if (edit.kind === "delete" && edit.target.kind === "toolbox-statement") {
    next.toolboxStatements.splice(edit.target.index, 1);
  } else {
    // for model edits the candidate is the committed model, so its
    // validation (diagnostics and knowledge trace) carries over as-is;
    // toolbox edits keep the previous state (the probe never commits)
    next.lastDiagnostics = validation.diagnostics;
    next.lastTrace = validation.trace;
  }
  return { ok: true, design: next };
}

// -- history -----------------------------------------------------------------

export class History {
  private past: Design[] = [];
  private future: Design[] = [];

  constructor(public present: Design) {}

  async apply(edit: Edit, service: ServiceClient): Promise<ApplyResult> {
    const result = await applyEdit(this.present, edit, service);
    if (result.ok) {
      this.past.push(this.present);
      this.future = [];
      this.present = result.design;
    }
    return result;
  }

  canUndo(): boolean {
    return this.past.length > 0;
  }

  canRedo(): boolean {
    return this.future.length > 0;
  }

  undo(): Design {
    const previous = this.past.pop();
    if (previous) {
      this.future.push(this.present);
      this.present = previous;
    }
    return this.present;
  }

  redo(): Design {
    const next = this.future.pop();
    if (next) {
      this.past.push(this.present);
      this.present = next;
    }
    return this.present;
  }
}
