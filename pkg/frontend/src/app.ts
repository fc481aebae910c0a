// DOM wiring for the design editor: toolbox on the left, the two parties
// with their knowledge boxes and the message flow in the middle, final
// operations below. Elements from the toolbox are dragged onto target
// boxes; every drop goes through the edit pipeline, so incompatible drops
// bounce with inline feedback before anything changes.

import { Design, designToXml, finalKnowledge, knowledgeBefore, loadDesign, newDesign, toPsv, IncompleteDesignError } from "./design.js";
import { ApplyResult, Edit, History, StatementBox, VariableTarget } from "./edits.js";
import { Application, Assignment, Term, isApplication, samplesSet } from "./psv.js";
import { CanvasAnchor, Diagnostic, ServiceClient, anchorFor } from "./service.js";

const service = new ServiceClient(
  new URLSearchParams(location.search).get("service") ?? "http://127.0.0.1:8788",
);
let history = new History(newDesign("untitled"));
// coalesce concurrent edits: only the latest one may commit (latest wins)
let editToken = 0;

function $(id: string): HTMLElement {
  const element = document.getElementById(id);
  if (!element) throw new Error(`missing #${id}`);
  return element;
}

function termText(term: Term): string {
  if (!isApplication(term)) return term.ident;
  return `${term.function}(${term.args.map(termText).join(", ")})`;
}

function statementText(statement: Assignment): string {
  if (samplesSet(statement.source)) {
    return `${statement.target} := sample(${statement.source.sampleFrom})`;
  }
  return `${statement.target} := ${termText(statement.source)}`;
}

function flash(message: string, kind: "ok" | "bad" = "ok"): void {
  const banner = $("banner");
  banner.textContent = message;
  banner.className = kind;
  if (message) setTimeout(() => (banner.textContent = ""), 4000);
}

async function runEdit(edit: Edit): Promise<ApplyResult> {
  const token = ++editToken;
  const result = await history.apply(edit, service);
  if (token !== editToken) return result; // superseded by a newer edit
  if (!result.ok) {
    flash(`${result.code}: ${result.reason}`, "bad");
    if (result.code === "rejected-drop") {
      for (const diagnostic of result.diagnostics) highlight(anchorFor(diagnostic.path));
    }
  }
  render();
  return result;
}

function highlight(anchor: CanvasAnchor): void {
  let anchorId = "canvas";
  if (anchor.kind === "message") anchorId = `message-${anchor.index}-${anchor.box}`;
  if (anchor.kind === "entity") anchorId = `party-${anchor.index}`;
  if (anchor.kind === "declaration") anchorId = "toolbox";
  const element = document.getElementById(anchorId);
  if (element) {
    element.classList.add("flash-bad");
    setTimeout(() => element.classList.remove("flash-bad"), 1500);
  }
}

// -- drag and drop -----------------------------------------------------------

function draggable(element: HTMLElement, payload: string): void {
  element.draggable = true;
  element.addEventListener("dragstart", (event) => {
    event.dataTransfer?.setData("text/plain", payload);
  });
}

function dropTarget(element: HTMLElement, onDrop: (payload: string) => void): void {
  element.addEventListener("dragover", (event) => event.preventDefault());
  element.addEventListener("drop", (event) => {
    event.preventDefault();
    const payload = event.dataTransfer?.getData("text/plain");
    if (payload) onDrop(payload);
  });
}

function statementDrop(box: StatementBox): (payload: string) => void {
  return (payload) => {
    const dropped = JSON.parse(payload);
    if (dropped.kind !== "statement") return;
    void runEdit({ kind: "drop-statement", box, statement: dropped.statement });
  };
}

function variableDrop(target: VariableTarget): (payload: string) => void {
  return (payload) => {
    const dropped = JSON.parse(payload);
    if (dropped.kind !== "variable") return;
    void runEdit({ kind: "drop-variable", target, ident: dropped.ident });
  };
}

// -- rendering ---------------------------------------------------------------

function render(): void {
  const design = history.present;
  renderToolbox(design);
  renderParties(design);
  renderMessages(design);
  renderFinals(design);
  renderDiagnostics(design);
  ($("undo") as HTMLButtonElement).disabled = !history.canUndo();
  ($("redo") as HTMLButtonElement).disabled = !history.canRedo();
}

function section(title: string, items: HTMLElement[], addLabel: string, onAdd: () => void): HTMLElement {
  const box = document.createElement("div");
  box.className = "tool-section";
  const heading = document.createElement("h3");
  heading.textContent = title;
  const add = document.createElement("button");
  add.textContent = addLabel;
  add.addEventListener("click", onAdd);
  heading.append(" ", add);
  box.append(heading, ...items);
  return box;
}

function chip(text: string, payload?: string): HTMLElement {
  const element = document.createElement("span");
  element.className = "chip";
  element.textContent = text;
  if (payload) draggable(element, payload);
  return element;
}

function renderToolbox(design: Design): void {
  const box = $("toolbox");
  box.textContent = "";
  const model = design.model;
  box.append(
    section(
      "Sets",
      model.sets.map((s) => chip(s.ident)),
      "+",
      () => {
        const ident = prompt("set identifier");
        if (!ident) return;
        const hint = prompt("hint (optional)") || undefined;
        void runEdit({ kind: "add-set", ident, hint });
      },
    ),
    section(
      "Functions",
      model.functions.map((f) => chip(`${f.ident}/${f.arity}`)),
      "+",
      () => {
        const ident = prompt("function identifier");
        if (!ident) return;
        const params = prompt("parameter sets, comma separated") ?? "";
        const result = prompt("result set");
        if (!result) return;
        void runEdit({
          kind: "add-function",
          ident,
          paramSets: params.split(",").map((p) => p.trim()).filter(Boolean),
          resultSet: result,
        });
      },
    ),
    section(
      "Constants",
      model.variables
        .filter((v) => v.modifier === "const")
        .map((v) => chip(`${v.ident}: ${v.set}`, JSON.stringify({ kind: "variable", ident: v.ident }))),
      "+",
      () => addVariable("const"),
    ),
    section(
      "Variables",
      model.variables
        .filter((v) => v.modifier !== "const")
        .map((v) => chip(`${v.ident}: ${v.set}`, JSON.stringify({ kind: "variable", ident: v.ident }))),
      "+",
      () => addVariable(undefined),
    ),
    section(
      "Applications",
      design.toolboxApplications.map((app) => chip(termText(app))),
      "+",
      () => {
        const text = prompt("application, e.g. exp(g, x)");
        if (!text) return;
        const application = parseApplicationText(text);
        if (!application) {
          flash("cannot read that application", "bad");
          return;
        }
        void runEdit({ kind: "create-application", application });
      },
    ),
    section(
      "Statements",
      design.toolboxStatements.map((statement) =>
        chip(statementText(statement), JSON.stringify({ kind: "statement", statement })),
      ),
      "+",
      () => {
        const target = prompt("assign to variable");
        if (!target) return;
        const source = prompt("source: sample(Set) or a term like exp(g, x) or a variable");
        if (!source) return;
        const statement = parseStatementText(target, source);
        if (!statement) {
          flash("cannot read that statement", "bad");
          return;
        }
        void runEdit({ kind: "create-statement", statement });
      },
    ),
  );
}

function addVariable(modifier: "const" | undefined): void {
  const ident = prompt("variable identifier");
  if (!ident) return;
  const set = prompt("set");
  if (!set) return;
  const scope = prompt("owning party (empty for global)") || undefined;
  void runEdit({ kind: "add-variable", ident, set, modifier, scope });
}

function parseApplicationText(text: string): Application | null {
  const term = parseTermText(text.trim());
  return term && isApplication(term) ? term : null;
}

function parseTermText(text: string): Term | null {
  const call = /^(\w+)\((.*)\)$/s.exec(text.trim());
  if (!call) {
    return /^\w+$/.test(text.trim()) ? { ident: text.trim() } : null;
  }
  const args: Term[] = [];
  let depth = 0;
  let start = 0;
  const body = call[2]!;
  for (let i = 0; i <= body.length; i += 1) {
    const ch = body[i];
    if (ch === "(") depth += 1;
    if (ch === ")") depth -= 1;
    if ((ch === "," && depth === 0) || i === body.length) {
      const piece = body.slice(start, i).trim();
      if (piece) {
        const parsed = parseTermText(piece);
        if (!parsed) return null;
        args.push(parsed);
      }
      start = i + 1;
    }
  }
  return { function: call[1]!, args };
}

function parseStatementText(target: string, source: string): Assignment | null {
  const sampled = /^sample\((\w+)\)$/.exec(source.trim());
  if (sampled) {
    return { target, mode: "probabilistic", source: { sampleFrom: sampled[1]! } };
  }
  const term = parseTermText(source);
  return term ? { target, mode: "deterministic", source: term } : null;
}

function renderParties(design: Design): void {
  const container = $("parties");
  container.textContent = "";
  design.model.entities.forEach((entity, index) => {
    const column = document.createElement("div");
    column.className = "party";
    column.id = `party-${index + 1}`;
    const title = document.createElement("h2");
    title.textContent = entity.ident;
    const initial = document.createElement("div");
    initial.className = "box";
    initial.append(
      "initial knowledge: ",
      ...(entity.knowledge?.vars.map((v) => chip(v.ident)) ?? []),
    );
    dropTarget(initial, variableDrop({ kind: "initial-knowledge", entity: entity.ident }));
    const now = document.createElement("div");
    now.className = "box knowledge";
    now.textContent = `knows: ${finalKnowledge(design.lastTrace, entity.ident).join(", ") || "-"}`;
    column.append(title, initial, now);
    container.append(column);
  });
}

function renderMessages(design: Design): void {
  const container = $("messages");
  container.textContent = "";
  design.model.messages.forEach((message, idx) => {
    const index = idx + 1;
    const row = document.createElement("div");
    row.className = "message";
    row.id = `message-${index}-message`;
    const head = document.createElement("h3");
    head.textContent = `${index}. ${message.from} -> ${message.to}`;
    row.append(head);

    const knowledge = document.createElement("div");
    knowledge.className = "box";
    knowledge.id = `message-${index}-knowledge`;
    knowledge.textContent = design.model.entities
      .map(
        (e) =>
          `${e.ident} knows: ${knowledgeBefore(design.lastTrace, e.ident, index).join(", ") || "-"}`,
      )
      .join("   |   ");
    row.append(knowledge);

    const boxes: [string, string, HTMLElement][] = [];
    const pre = document.createElement("div");
    pre.append("pre: ", ...message.pre.map((s) => chip(statementText(s))));
    dropTarget(pre, statementDrop({ scope: "pre", message: index }));
    boxes.push(["pre", "pre", pre]);
    const send = document.createElement("div");
    send.append("sends: ", ...message.send.map((v) => chip(v.ident)));
    dropTarget(send, variableDrop({ kind: "event", message: index, event: "send" }));
    boxes.push(["send", "send", send]);
    const channel = document.createElement("div");
    channel.textContent = message.channel
      ? `channel ${message.channel.ident ?? ""} [${message.channel.modifier}]`
      : "channel: generic insecure";
    boxes.push(["channel", "channel", channel]);
    const recv = document.createElement("div");
    recv.append("receives: ", ...message.recv.map((v) => chip(v.ident)));
    dropTarget(recv, variableDrop({ kind: "event", message: index, event: "receive" }));
    boxes.push(["receive", "receive", recv]);
    const post = document.createElement("div");
    post.append("post: ", ...message.post.map((s) => chip(statementText(s))));
    dropTarget(post, statementDrop({ scope: "post", message: index }));
    boxes.push(["post", "post", post]);
    for (const [, name, element] of boxes) {
      element.className = "box";
      element.id = `message-${index}-${name}`;
      row.append(element);
    }
    container.append(row);
  });
}

function renderFinals(design: Design): void {
  const container = $("finals");
  container.textContent = "";
  design.model.entities.forEach((entity) => {
    const fin = design.model.finalise.find((f) => f.entity === entity.ident);
    const box = document.createElement("div");
    box.className = "box";
    box.append(
      `${entity.ident} finally: `,
      ...(fin?.statements.map((s) => chip(statementText(s))) ?? []),
    );
    dropTarget(box, statementDrop({ scope: "finalise", entity: entity.ident }));
    container.append(box);
  });
}

function renderDiagnostics(design: Design): void {
  const list = $("diagnostics");
  list.textContent = "";
  for (const diagnostic of design.lastDiagnostics) {
    const item = document.createElement("li");
    item.textContent = `${diagnostic.severity} ${diagnostic.path} ${diagnostic.code}: ${diagnostic.message}`;
    item.className = diagnostic.severity;
    list.append(item);
  }
}

function renderFailure(diagnostics: Diagnostic[]): void {
  for (const diagnostic of diagnostics) highlight(anchorFor(diagnostic.path));
  flash(diagnostics.map((d) => `${d.code} at ${d.path}`).join("; "), "bad");
}

// -- top bar -----------------------------------------------------------------

function download(name: string, data: Uint8Array | string): void {
  const blob = new Blob([data as BlobPart]);
  const link = document.createElement("a");
  link.href = URL.createObjectURL(blob);
  link.download = name;
  link.click();
  URL.revokeObjectURL(link.href);
}

function wireTopBar(): void {
  $("new").addEventListener("click", () => {
    const ident = prompt("model identifier", "untitled") || "untitled";
    history = new History(newDesign(ident));
    render();
  });
  $("add-message").addEventListener("click", () => {
    const from = prompt("from party", "Alice");
    const to = prompt("to party", "Bob");
    if (from && to) void runEdit({ kind: "add-message", from, to });
  });
  $("undo").addEventListener("click", () => {
    history.undo();
    render();
  });
  $("redo").addEventListener("click", () => {
    history.redo();
    render();
  });
  $("open").addEventListener("change", async (event) => {
    const input = event.target as HTMLInputElement;
    const file = input.files?.[0];
    if (!file) return;
    try {
      history = new History(await loadDesign(await file.text(), service));
      flash(`loaded ${file.name}`);
    } catch (failure) {
      flash(String(failure), "bad");
    }
    render();
  });
  $("save").addEventListener("click", () => {
    try {
      download(`${history.present.model.ident}.psv`, toPsv(history.present));
    } catch (failure) {
      if (failure instanceof IncompleteDesignError) {
        flash(failure.message, "bad");
        return;
      }
      throw failure;
    }
  });
  for (const [target, extension] of [
    ["proverif", ".pv"],
    ["tamarin", ".spthy"],
    ["cpp", ".cpp"],
  ] as const) {
    $(`export-${target}`).addEventListener("click", async () => {
      let psv: string;
      try {
        psv = toPsv(history.present);
      } catch (failure) {
        flash(String(failure), "bad");
        return;
      }
      try {
        const result = await service.exportModel(psv, target);
        if (result.ok) {
          download(`${history.present.model.ident}${extension}`, result.artifact);
        } else {
          renderFailure(result.diagnostics);
        }
      } catch (failure) {
        flash(String(failure), "bad"); // service unreachable; design preserved
      }
    });
  }
  $("load-sample").addEventListener("click", async () => {
    try {
      const names = await service.samples();
      const name = prompt(`sample name (${names.join(", ")})`, names[0]);
      if (!name) return;
      history = new History(await loadDesign(await service.sampleContent(name), service));
      flash(`loaded sample ${name}`);
    } catch (failure) {
      flash(String(failure), "bad");
    }
    render();
  });
}

wireTopBar();
render();
