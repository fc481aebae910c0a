// PSV document model plus a parser and the canonical serializer. The
// serializer is byte-compatible with the core toolchain: same indentation,
// attribute order, empty-element conventions and trailing newline, so a
// design saved here and a model saved by the CLI compare equal.

import { XmlElement, readXml } from "./xml.js";

export interface VarRef {
  ident: string;
  modifier?: string;
}

export interface Application {
  function: string;
  args: Term[];
}

export type Term = VarRef | Application;

export function isApplication(term: Term): term is Application {
  return "function" in term;
}

export interface SetSample {
  sampleFrom: string;
}

export interface SetDecl {
  ident: string;
  elementSets: string[];
  hint?: string;
}

export interface FuncDecl {
  ident: string;
  arity: number;
  paramSets: string[];
  resultSet: string;
  hint?: string;
}

export interface VarDecl {
  ident: string;
  modifier?: string;
  set: string;
  scope?: string;
  hint?: string;
}

export interface EquationDecl {
  ident: string;
  quantified: VarRef[];
  lhs: Application;
  rhs: Term;
}

export interface Knowledge {
  owner: string;
  vars: VarRef[];
}

export interface EntityDecl {
  ident: string;
  knowledge?: Knowledge;
}

export interface ChannelSpec {
  ident?: string;
  modifier: string;
  content: Application[];
}

export interface Assignment {
  target: string;
  mode: "deterministic" | "probabilistic";
  source: Term | SetSample;
}

export function samplesSet(source: Term | SetSample): source is SetSample {
  return "sampleFrom" in source;
}

export interface MessageSpec {
  from: string;
  to: string;
  knowledge: Knowledge[];
  pre: Assignment[];
  send: VarRef[];
  channel: ChannelSpec | null;
  recv: VarRef[];
  post: Assignment[];
}

export interface FinaliseSpec {
  entity: string;
  knowledge?: Knowledge;
  statements: Assignment[];
}

export interface PsvModel {
  ident: string;
  security: number;
  sets: SetDecl[];
  functions: FuncDecl[];
  variables: VarDecl[];
  equations: EquationDecl[];
  entities: EntityDecl[];
  messages: MessageSpec[];
  finalise: FinaliseSpec[];
  properties: Application[];
}

export function emptyModel(ident: string): PsvModel {
  return {
    ident,
    security: 512,
    sets: [],
    functions: [],
    variables: [],
    equations: [],
    entities: [],
    messages: [],
    finalise: [],
    properties: [],
  };
}

export function freeVariables(term: Term): string[] {
  const seen = new Set<string>();
  const out: string[] = [];
  const walk = (t: Term): void => {
    if (isApplication(t)) {
      t.args.forEach(walk);
    } else if (!seen.has(t.ident)) {
      seen.add(t.ident);
      out.push(t.ident);
    }
  };
  walk(term);
  return out;
}

// ---------------------------------------------------------------------------
// parsing

export function parsePsv(text: string): PsvModel {
  const root = readXml(text);
  if (root.tag !== "model") throw new Error(`root element is ${root.tag}, not model`);
  const model = emptyModel(attr(root, "id"));
  model.security = root.attrs.has("security") ? Number(root.attrs.get("security")) : 512;
  for (const child of root.children) {
    switch (child.tag) {
      case "set":
        model.sets.push({
          ident: attr(child, "id"),
          elementSets: child.children.map((ref) => attr(ref, "id")),
          hint: child.attrs.get("hint"),
        });
        break;
      case "function": {
        const refs = child.children.map((ref) => attr(ref, "id"));
        model.functions.push({
          ident: attr(child, "id"),
          arity: Number(attr(child, "arity")),
          paramSets: refs.slice(0, -1),
          resultSet: refs[refs.length - 1] ?? "",
          hint: child.attrs.get("hint"),
        });
        break;
      }
      case "declaration":
        model.variables.push({
          ident: attr(child, "variable"),
          modifier: child.attrs.get("modifier"),
          set: attr(child, "set"),
          scope: child.attrs.get("entity"),
          hint: child.attrs.get("hint"),
        });
        break;
      case "equation":
        model.equations.push(parseEquation(child));
        break;
      case "protocol":
        parseProtocol(child, model);
        break;
      default:
        throw new Error(`unexpected element ${child.tag} in model`);
    }
  }
  return model;
}

function attr(elem: XmlElement, name: string): string {
  const value = elem.attrs.get(name);
  if (value === undefined) throw new Error(`${elem.tag} is missing attribute ${name}`);
  return value;
}

function parseVarRef(elem: XmlElement): VarRef {
  const ref: VarRef = { ident: attr(elem, "id") };
  const modifier = elem.attrs.get("modifier");
  if (modifier !== undefined) ref.modifier = modifier;
  return ref;
}

function parseTerm(elem: XmlElement): Term {
  if (elem.tag === "variable" || elem.tag === "argument") return parseVarRef(elem);
  return { function: attr(elem, "function"), args: elem.children.map(parseTerm) };
}

function parseEquation(elem: XmlElement): EquationDecl {
  const quantified: VarRef[] = [];
  const terms: Term[] = [];
  for (const child of elem.children) {
    if (child.tag === "variable" && terms.length === 0) {
      quantified.push(parseVarRef(child));
    } else {
      terms.push(parseTerm(child));
    }
  }
  const [lhs, rhs] = terms;
  if (!lhs || !isApplication(lhs) || !rhs) {
    throw new Error(`equation ${attr(elem, "id")} is malformed`);
  }
  return { ident: attr(elem, "id"), quantified, lhs, rhs };
}

function parseKnowledge(elem: XmlElement): Knowledge {
  return { owner: attr(elem, "entity"), vars: elem.children.map(parseVarRef) };
}

function parseAssignment(elem: XmlElement): Assignment {
  const child = elem.children[0];
  if (!child) throw new Error("assignment without a source");
  const source: Term | SetSample =
    child.tag === "set" ? { sampleFrom: attr(child, "id") } : parseTerm(child);
  return {
    target: attr(elem, "variable"),
    mode: attr(elem, "type") as Assignment["mode"],
    source,
  };
}

function parseProtocol(elem: XmlElement, model: PsvModel): void {
  for (const child of elem.children) {
    switch (child.tag) {
      case "entity": {
        const entity: EntityDecl = { ident: attr(child, "id") };
        const knowledgeElem = child.children[0];
        if (knowledgeElem) {
          const knowledge = parseKnowledge(knowledgeElem);
          if (knowledge.vars.length > 0) entity.knowledge = knowledge;
        }
        model.entities.push(entity);
        break;
      }
      case "message":
        model.messages.push(parseMessage(child));
        break;
      case "finalise": {
        const fin: FinaliseSpec = { entity: attr(child, "entity"), statements: [] };
        for (const sub of child.children) {
          if (sub.tag === "knowledge") {
            const knowledge = parseKnowledge(sub);
            if (knowledge.vars.length > 0) fin.knowledge = knowledge;
          } else {
            fin.statements.push(parseAssignment(sub));
          }
        }
        if (fin.knowledge !== undefined || fin.statements.length > 0) {
          model.finalise.push(fin);
        }
        break;
      }
      case "correctness": {
        const relation = parseTerm(child.children[0]!);
        if (!isApplication(relation)) throw new Error("correctness needs an application");
        model.properties.push(relation);
        break;
      }
      default:
        throw new Error(`unexpected element ${child.tag} in protocol`);
    }
  }
}

function parseMessage(elem: XmlElement): MessageSpec {
  const message: MessageSpec = {
    from: attr(elem, "from"),
    to: attr(elem, "to"),
    knowledge: [],
    pre: [],
    send: [],
    channel: null,
    recv: [],
    post: [],
  };
  const events: VarRef[][] = [];
  for (const child of elem.children) {
    switch (child.tag) {
      case "knowledge":
        message.knowledge.push(parseKnowledge(child));
        break;
      case "pre":
        message.pre = child.children.map(parseAssignment);
        break;
      case "post":
        message.post = child.children.map(parseAssignment);
        break;
      case "event":
        events.push(child.children.map(parseVarRef));
        break;
      case "channel":
        if (child.attrs.has("id") || child.children.length > 0) {
          message.channel = {
            ident: child.attrs.get("id"),
            modifier: child.attrs.get("type") ?? "insecure",
            content: child.children.map(parseTerm).filter(isApplication),
          };
        }
        break;
    }
  }
  message.send = events[0] ?? [];
  message.recv = events[1] ?? [];
  return message;
}

// ---------------------------------------------------------------------------
// canonical serialization

const ATTRIBUTE_ORDER = [
  "from",
  "to",
  "type",
  "function",
  "id",
  "variable",
  "entity",
  "set",
  "modifier",
  "arity",
  "security",
  "hint",
] as const;

type Attrs = Partial<Record<(typeof ATTRIBUTE_ORDER)[number], string | undefined>>;

class Writer {
  private lines: string[] = ['<?xml version="1.0" encoding="UTF-8"?>'];
  private depth = 0;

  private render(tag: string, attrs: Attrs): string {
    const parts = [tag];
    for (const name of ATTRIBUTE_ORDER) {
      const value = attrs[name];
      if (value !== undefined) parts.push(`${name}="${escapeAttr(value)}"`);
    }
    return parts.join(" ");
  }

  open(tag: string, attrs: Attrs = {}): void {
    this.lines.push(`${"  ".repeat(this.depth)}<${this.render(tag, attrs)}>`);
    this.depth += 1;
  }

  close(tag: string): void {
    this.depth -= 1;
    this.lines.push(`${"  ".repeat(this.depth)}</${tag}>`);
  }

  leaf(tag: string, attrs: Attrs = {}): void {
    this.lines.push(`${"  ".repeat(this.depth)}<${this.render(tag, attrs)}/>`);
  }

  text(): string {
    return this.lines.join("\n") + "\n";
  }
}

function escapeAttr(value: string): string {
  return value
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

export function serializePsv(model: PsvModel): string {
  const w = new Writer();
  w.open("model", { id: model.ident, security: String(model.security) });
  for (const s of model.sets) {
    if (s.elementSets.length === 0) {
      w.leaf("set", { id: s.ident, hint: s.hint });
    } else {
      w.open("set", { id: s.ident, hint: s.hint });
      for (const ref of s.elementSets) w.leaf("set", { id: ref });
      w.close("set");
    }
  }
  for (const f of model.functions) {
    const refs = [...f.paramSets, ...(f.resultSet ? [f.resultSet] : [])];
    if (refs.length === 0) {
      w.leaf("function", { id: f.ident, arity: String(f.arity), hint: f.hint });
    } else {
      w.open("function", { id: f.ident, arity: String(f.arity), hint: f.hint });
      for (const ref of refs) w.leaf("set", { id: ref });
      w.close("function");
    }
  }
  for (const v of model.variables) {
    w.leaf("declaration", {
      variable: v.ident,
      entity: v.scope,
      set: v.set,
      modifier: v.modifier,
      hint: v.hint,
    });
  }
  for (const eq of model.equations) {
    w.open("equation", { id: eq.ident });
    for (const q of eq.quantified) writeVarRef(w, q, "variable");
    writeTerm(w, eq.lhs, "variable");
    writeTerm(w, eq.rhs, "variable");
    w.close("equation");
  }
  w.open("protocol");
  for (const entity of model.entities) {
    if (!entity.knowledge || entity.knowledge.vars.length === 0) {
      w.leaf("entity", { id: entity.ident });
    } else {
      w.open("entity", { id: entity.ident });
      writeKnowledge(w, entity.knowledge);
      w.close("entity");
    }
  }
  for (const message of model.messages) writeMessage(w, message);
  for (const fin of model.finalise) {
    if (!fin.knowledge && fin.statements.length === 0) continue;
    w.open("finalise", { entity: fin.entity });
    if (fin.knowledge) writeKnowledge(w, fin.knowledge);
    for (const statement of fin.statements) writeAssignment(w, statement);
    w.close("finalise");
  }
  for (const relation of model.properties) {
    w.open("correctness");
    writeTerm(w, relation, "argument");
    w.close("correctness");
  }
  w.close("protocol");
  w.close("model");
  return w.text();
}

function writeVarRef(w: Writer, ref: VarRef, tag: "variable" | "argument"): void {
  w.leaf(tag, { id: ref.ident, modifier: ref.modifier });
}

function writeTerm(w: Writer, term: Term, refTag: "variable" | "argument"): void {
  if (!isApplication(term)) {
    writeVarRef(w, term, refTag);
    return;
  }
  if (term.args.length === 0) {
    w.leaf("application", { function: term.function });
    return;
  }
  w.open("application", { function: term.function });
  for (const arg of term.args) writeTerm(w, arg, "argument");
  w.close("application");
}

function writeKnowledge(w: Writer, knowledge: Knowledge): void {
  if (knowledge.vars.length === 0) return;
  w.open("knowledge", { entity: knowledge.owner });
  for (const ref of knowledge.vars) writeVarRef(w, ref, "variable");
  w.close("knowledge");
}

function writeAssignment(w: Writer, assignment: Assignment): void {
  w.open("assignment", { type: assignment.mode, variable: assignment.target });
  if (samplesSet(assignment.source)) {
    w.leaf("set", { id: assignment.source.sampleFrom });
  } else {
    writeTerm(w, assignment.source, "variable");
  }
  w.close("assignment");
}

function writeStatementBlock(w: Writer, tag: "pre" | "post", statements: Assignment[]): void {
  if (statements.length === 0) {
    w.leaf(tag);
    return;
  }
  w.open(tag);
  for (const statement of statements) writeAssignment(w, statement);
  w.close(tag);
}

function writeEvent(w: Writer, kind: "send" | "receive", payload: VarRef[]): void {
  if (payload.length === 0) {
    w.leaf("event", { type: kind });
    return;
  }
  w.open("event", { type: kind });
  for (const ref of payload) writeVarRef(w, ref, "variable");
  w.close("event");
}

function writeMessage(w: Writer, message: MessageSpec): void {
  w.open("message", { from: message.from, to: message.to });
  for (const knowledge of message.knowledge) writeKnowledge(w, knowledge);
  writeStatementBlock(w, "pre", message.pre);
  writeEvent(w, "send", message.send);
  if (message.channel === null) {
    w.leaf("channel");
  } else if (message.channel.content.length === 0) {
    w.leaf("channel", { type: message.channel.modifier, id: message.channel.ident });
  } else {
    w.open("channel", { type: message.channel.modifier, id: message.channel.ident });
    for (const app of message.channel.content) writeTerm(w, app, "variable");
    w.close("channel");
  }
  writeEvent(w, "receive", message.recv);
  writeStatementBlock(w, "post", message.post);
  w.close("message");
}
