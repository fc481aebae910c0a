"""Refinement of a validated model into an applied pi-calculus script.

Emission follows fixed per-construct rules:

  - variables emit bare (``x``) or typed (``x: N``) from their declaration,
  - applications emit ``f(M1, ..., Ml)`` with untyped arguments,
  - probabilistic assignments become ``new x: T;``, deterministic ones
    ``let x = M in``,
  - a send becomes an output on the message's channel, a receive a typed
    input; multi-variable payloads are tupled, single ones stay bare,
  - per entity, one named process folds its message roles in protocol
    order: (pre*, send) when it sends, (receive, post*) when it receives,
  - the correctness property, when present, turns into per-entity tables
    filled by ``insert``, an ``agreement`` process reading them back, an
    event and the query asking for it.

Output layout is fixed (types, channel, consts, funs, equations, tables,
events, queries, processes, agreement, main) and byte-deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

from .diagnostics import Diagnostic, ExportError, error
from .model import (
    Application,
    Assignment,
    Channel,
    Entity,
    Message,
    Model,
    SetRef,
    Term,
    VarRef,
    channels_of,
    resolve,
)
from .validator import check_semantics

EQUALITY_HINT = "equality"

UNTYPED = "untyped"
TYPED = "typed"

RESERVED = frozenset(
    """
    among axiom bitstring bool channel choice clauses const def diff do
    elimtrue else equation equivalence event expand fail false for forall
    free fun get if implementation in insert lemma let letfun letproba nat
    new noninterf not nounif or otherwise out param phase pred proba process
    proof public_vars putbegin query reduc restriction secret select set
    suchthat sync table then true type weaksecret yield
    """.split()
)


@dataclass(frozen=True)
class PiText:
    """Generated script split into its ordered fragments."""

    preamble: str
    processes: str
    correctness: str
    main: str

    @property
    def text(self) -> str:
        return self.preamble + self.processes + self.correctness + self.main


def sanitize(ident: str) -> str:
    """Identifiers colliding with reserved words get a ``_v`` suffix."""
    return ident + "_v" if ident in RESERVED else ident


def _declared_set(model: Model, ident: str) -> str:
    decl = resolve(model, ident, "variable")
    if decl is None:
        raise ExportError([error("/model", "undeclared-variable", f"variable {ident} is not declared")])
    return decl.set_id


def channel_name(channel: Channel | None) -> str:
    """The generic insecure channel and every insecure channel render as the
    single free public channel c; auth/secure channels get a private channel
    of their own."""
    if channel is None or channel.ident is None or channel.modifier == "insecure":
        return "c"
    return f"ch_{sanitize(channel.ident)}"


def emit_term(model: Model, term: Term, mode: str = UNTYPED) -> str:
    """``x`` or ``x: T`` for variables, ``f(M1, ..., Ml)`` for applications
    (arguments always untyped)."""
    if isinstance(term, VarRef):
        if mode == TYPED:
            return f"{sanitize(term.ident)}: {sanitize(_declared_set(model, term.ident))}"
        return sanitize(term.ident)
    args = ", ".join(emit_term(model, arg, UNTYPED) for arg in term.args)
    return f"{sanitize(term.function)}({args})"


def emit_assignment(model: Model, assignment: Assignment) -> str:
    target = sanitize(assignment.target)
    if assignment.is_probabilistic:
        declared = sanitize(_declared_set(model, assignment.target))
        return f"new {target}: {declared};"
    return f"let {target} = {emit_term(model, assignment.source)} in"


def emit_send(model: Model, message: Message) -> str:
    payload = [emit_term(model, v, UNTYPED) for v in message.send_payload]
    inner = payload[0] if len(payload) == 1 else "(" + ", ".join(payload) + ")"
    return f"out({channel_name(message.channel)}, {inner});"


def emit_receive(model: Model, message: Message) -> str:
    payload = [emit_term(model, v, TYPED) for v in message.recv_payload]
    inner = payload[0] if len(payload) == 1 else "(" + ", ".join(payload) + ")"
    return f"in({channel_name(message.channel)}, {inner});"


def emit_statement(model: Model, statement, message: Message | None = None) -> str:
    """Single statement line: an Assignment, or the send/receive event of
    ``message`` passed as the strings "send"/"receive"."""
    if isinstance(statement, Assignment):
        return emit_assignment(model, statement)
    if statement == "send":
        return emit_send(model, message)
    if statement == "receive":
        return emit_receive(model, message)
    raise ValueError(f"not a statement: {statement!r}")


# ---------------------------------------------------------------------------
# correctness instrumentation


@dataclass(frozen=True)
class CorrectnessPlan:
    tables: tuple[tuple[str, str], ...]  # (table name, type) per entity in order
    inserts: dict[str, str]  # entity id -> insert line
    consumed: dict[str, str]  # entity id -> finalise target folded into the insert
    event_decl: str
    query: str
    agreement: str


def _table_suffix(entities: tuple[Entity, ...], ident: str) -> str:
    """First letter when unique among entities (finalA for Alice), otherwise
    the full entity identifier."""
    initials = [e.ident[0] for e in entities]
    return ident[0] if initials.count(ident[0]) == 1 else ident


def plan_correctness(model: Model) -> CorrectnessPlan | None:
    """Build the §-four artifacts for the first correctness property.

    Raises ExportError(unsupported-relation) unless the property is a binary
    equality whose arguments are deterministic finalise outputs.
    """
    proto = model.protocol
    if not proto.properties:
        return None
    relation = proto.properties[0].relation
    path = "/model/protocol/correctness[1]"

    def unsupported(reason: str) -> ExportError:
        return ExportError([error(path, "unsupported-relation", reason)])

    func = resolve(model, relation.function, "function")
    if func is None or not (func.ident == "eq" or func.hint == EQUALITY_HINT):
        raise unsupported(f"relation {relation.function} is not an equality")
    if len(relation.args) != 2:
        raise unsupported(f"relation {relation.function} must compare exactly two values")

    producers: dict[str, tuple[str, Term]] = {}
    for fin in proto.finalise:
        for statement in fin.statements:
            if statement.mode == "deterministic":
                producers[statement.target] = (fin.entity, statement.source)

    tables: list[tuple[str, str]] = []
    inserts: dict[str, str] = {}
    consumed: dict[str, str] = {}
    gets: list[str] = []
    value_type: str | None = None
    for arg in relation.args:
        if not isinstance(arg, VarRef) or arg.ident not in producers:
            raise unsupported("relation arguments must be deterministic finalise outputs")
        entity, source = producers[arg.ident]
        table = f"final{_table_suffix(proto.entities, entity)}"
        arg_type = sanitize(_declared_set(model, arg.ident))
        if value_type is None:
            value_type = arg_type
        elif value_type != arg_type:
            raise unsupported("relation arguments must share one type")
        tables.append((table, arg_type))
        inserts[entity] = f"insert {table}({emit_term(model, source)});"
        consumed[entity] = arg.ident
        gets.append(f"get {table}({sanitize(arg.ident)}) in")

    event_args = ", ".join(sanitize(arg.ident) for arg in relation.args)
    agreement = "let agreement = " + " ".join(gets) + f" event correctness({event_args})."
    return CorrectnessPlan(
        tables=tuple(tables),
        inserts=inserts,
        consumed=consumed,
        event_decl=f"event correctness({value_type}, {value_type}).",
        query=f"query k: {value_type}; event(correctness(k, k)) ==> true = true.",
        agreement=agreement,
    )


def emit_correctness(model: Model) -> str:
    """The four §-artifacts as one fragment (empty without a property)."""
    plan = plan_correctness(model)
    if plan is None:
        return ""
    lines = [f"table {name}({value_type})." for name, value_type in plan.tables]
    lines.append(plan.agreement)
    lines.append(plan.event_decl)
    lines.append(plan.query)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# processes


def process_name(entity: Entity | str) -> str:
    ident = entity.ident if isinstance(entity, Entity) else entity
    return f"proc_{sanitize(ident)}"


def entity_statement_lines(
    model: Model, entity: Entity, plan: CorrectnessPlan | None
) -> list[str]:
    """Statement lines of one entity's process, in message order: (pre*,
    send) for outgoing messages, (receive, post*) for incoming ones, then
    finalise statements, then the correctness insert."""
    lines: list[str] = []
    for message in model.protocol.messages:
        if message.sender == entity.ident:
            for assignment in message.pre:
                lines.append(emit_assignment(model, assignment))
            lines.append(emit_send(model, message))
        if message.receiver == entity.ident:
            lines.append(emit_receive(model, message))
            for assignment in message.post:
                lines.append(emit_assignment(model, assignment))
    consumed = plan.consumed.get(entity.ident) if plan else None
    for fin in model.protocol.finalise:
        if fin.entity != entity.ident:
            continue
        for statement in fin.statements:
            if consumed is not None and statement.target == consumed:
                continue  # folded into the insert below
            lines.append(emit_assignment(model, statement))
    if plan and entity.ident in plan.inserts:
        lines.append(plan.inserts[entity.ident])
    return lines


def emit_entity_process(model: Model, entity: Entity, plan: CorrectnessPlan | None = None) -> str:
    lines = entity_statement_lines(model, entity, plan)
    if not lines:
        return f"let {process_name(entity)} = 0."
    body = "\n".join(f"  {line}" for line in lines)
    return f"let {process_name(entity)} =\n{body}\n  0."


# ---------------------------------------------------------------------------
# preamble and main


def emit_preamble(model: Model) -> str:
    """Declarations in fixed order: types, channels, consts, funs, equations."""
    groups: list[list[str]] = []

    groups.append([f"type {sanitize(s.ident)}." for s in model.sets])

    channel_lines = ["free c: channel."]
    for channel in channels_of(model):
        if channel.modifier != "insecure":
            channel_lines.append(f"free {channel_name(channel)}: channel [private].")
    groups.append(channel_lines)

    groups.append(
        [
            f"const {sanitize(v.ident)}: {sanitize(v.set_id)}."
            for v in model.variables
            if v.is_global_const
        ]
    )

    fun_lines = []
    for f in model.functions:
        params = ", ".join(sanitize(p) for p in f.param_sets)
        fun_lines.append(f"fun {sanitize(f.ident)}({params}): {sanitize(f.result_set)}.")
    groups.append(fun_lines)

    equation_lines = []
    for eq in model.equations:
        quantified = ", ".join(emit_term(model, v, TYPED) for v in eq.quantified)
        lhs = emit_term(model, eq.lhs)
        rhs = emit_term(model, eq.rhs)
        equation_lines.append(f"equation forall {quantified}; {lhs} = {rhs}.")
    groups.append(equation_lines)

    blocks = ["\n".join(group) for group in groups if group]
    return "\n\n".join(blocks) + "\n"


def emit_main(model: Model, with_agreement: bool | None = None) -> str:
    """Parallel replication of every entity process, plus the agreement
    process when correctness was emitted."""
    if with_agreement is None:
        with_agreement = plan_correctness(model) is not None
    parts = [f"(!{process_name(e)})" for e in model.protocol.entities]
    if with_agreement:
        parts.append("agreement")
    return "process " + " | ".join(parts)


# ---------------------------------------------------------------------------
# whole-script export


def export(model: Model) -> PiText:
    """Complete script; deterministic bytes. Requires a clean model."""
    diagnostics = check_semantics(model)
    if diagnostics:
        raise ExportError(diagnostics)
    plan = plan_correctness(model)

    preamble = f"(* Protocol: {model.ident} *)\n\n" + emit_preamble(model)
    if plan is not None:
        tables = "\n".join(f"table {name}({value_type})." for name, value_type in plan.tables)
        preamble += "\n" + tables + "\n"
        preamble += "\n" + plan.event_decl + "\n"
        preamble += "\n" + plan.query + "\n"

    processes = ""
    for entity in model.protocol.entities:
        processes += "\n" + emit_entity_process(model, entity, plan) + "\n"

    correctness = ""
    if plan is not None:
        correctness = "\n" + plan.agreement + "\n"

    main = "\n" + emit_main(model, plan is not None) + "\n"
    return PiText(preamble=preamble, processes=processes, correctness=correctness, main=main)
