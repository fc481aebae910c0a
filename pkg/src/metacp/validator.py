"""Semantic analysis the structural grammar cannot express.

Four layers, composed by :func:`check_semantics`:

  1. declaration checks (namespace uniqueness, declared-before-use sets),
  2. reference checks (every identifier occurrence resolves, local
     invariants such as from != to and application arity),
  3. type checks over every statement, equation and property,
  4. knowledge flow (a forward pass deriving what each entity knows at
     every step, rejecting uses of unknown variables).

Knowledge annotations embedded in the document are never trusted: they are
recomputed and a warning is emitted on disagreement.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .diagnostics import Diagnostic, error, warning
from .model import (
    Application,
    Assignment,
    Equation,
    Finalise,
    Knowledge,
    Message,
    Model,
    SetRef,
    Term,
    VarRef,
    assignment_sources,
    free_variables,
    resolve,
)


# ---------------------------------------------------------------------------
# paths and ordering


def _msg_path(i: int) -> str:
    return f"/model/protocol/message[{i}]"


_SEGMENT_RE = re.compile(r"([a-z]+)(?:\[(\d+)\])?\Z")

_CHILD_RANKS = {
    "model": {"set": 0, "function": 1, "declaration": 2, "equation": 3, "protocol": 4},
    "protocol": {"entity": 0, "message": 1, "finalise": 2, "correctness": 3},
    "message": {"knowledge": 0, "pre": 1, "channel": 3, "post": 5},
    "finalise": {"knowledge": 0, "assignment": 1},
}


def _path_sort_key(path: str) -> tuple:
    """Sortable key putting diagnostics in document order.

    Works because diagnostics are anchored at statement granularity, never
    inside a term where argument and application siblings interleave.
    """
    segments = path.strip("/").split("/")
    key: list[tuple[int, int]] = []
    parent = None
    for segment in segments:
        m = _SEGMENT_RE.match(segment)
        if not m:
            return (tuple(key), path)
        tag, idx = m.group(1), int(m.group(2) or 1)
        ranks = _CHILD_RANKS.get(parent, {})
        if parent == "message" and tag == "event":
            rank = 2 if idx == 1 else 4
        else:
            rank = ranks.get(tag, 0)
        key.append((rank, idx))
        parent = tag
    return (tuple(key), path)


def document_order(diagnostics: list[Diagnostic]) -> list[Diagnostic]:
    return sorted(diagnostics, key=lambda d: _path_sort_key(d.path))


# ---------------------------------------------------------------------------
# declarations


def check_declarations(model: Model) -> list[Diagnostic]:
    """Namespace uniqueness plus declared-before-use for set references."""
    diagnostics: list[Diagnostic] = []

    declared_sets: set[str] = set()
    seen: dict[tuple[str, str], str] = {}

    def unique(namespace: str, ident: str, path: str) -> None:
        key = (namespace, ident)
        if key in seen:
            diagnostics.append(
                error(path, "duplicate-id", f"{namespace} {ident} already declared at {seen[key]}")
            )
        else:
            seen[key] = path

    for i, s in enumerate(model.sets, 1):
        path = f"/model/set[{i}]"
        unique("set", s.ident, path)
        for ref in s.element_sets:
            if ref in declared_sets:
                continue
            if any(other.ident == ref for other in model.sets):
                diagnostics.append(
                    error(path, "forward-reference", f"set {ref} is declared later than {s.ident}")
                )
            else:
                diagnostics.append(error(path, "undeclared-set", f"set {ref} is not declared"))
        declared_sets.add(s.ident)

    for i, f in enumerate(model.functions, 1):
        path = f"/model/function[{i}]"
        unique("function", f.ident, path)
        for ref in list(f.param_sets) + ([f.result_set] if f.result_set else []):
            if ref not in declared_sets:
                diagnostics.append(error(path, "undeclared-set", f"set {ref} is not declared"))

    for i, v in enumerate(model.variables, 1):
        path = f"/model/declaration[{i}]"
        unique("variable", v.ident, path)
        if v.set_id not in declared_sets:
            diagnostics.append(error(path, "undeclared-set", f"set {v.set_id} is not declared"))
        if v.scope is not None and resolve(model, v.scope, "entity") is None:
            diagnostics.append(error(path, "undeclared-entity", f"entity {v.scope} is not declared"))

    for i, e in enumerate(model.protocol.entities, 1):
        unique("entity", e.ident, f"/model/protocol/entity[{i}]")

    channel_modifiers: dict[str, str] = {}
    for i, m in enumerate(model.protocol.messages, 1):
        ch = m.channel
        if ch is None or ch.ident is None:
            continue
        previous = channel_modifiers.get(ch.ident)
        if previous is None:
            channel_modifiers[ch.ident] = ch.modifier
        elif previous != ch.modifier:
            diagnostics.append(
                error(
                    f"{_msg_path(i)}/channel",
                    "duplicate-id",
                    f"channel {ch.ident} redeclared with modifier {ch.modifier} (was {previous})",
                )
            )
    return diagnostics


# ---------------------------------------------------------------------------
# references and local invariants


def check_references(model: Model) -> list[Diagnostic]:
    """Every identifier occurrence resolves; local invariants hold."""
    diagnostics: list[Diagnostic] = []
    proto = model.protocol

    def check_term(term: Term, path: str) -> None:
        if isinstance(term, VarRef):
            if resolve(model, term.ident, "variable") is None:
                diagnostics.append(
                    error(path, "undeclared-variable", f"variable {term.ident} is not declared")
                )
            return
        func = resolve(model, term.function, "function")
        if func is None:
            diagnostics.append(
                error(path, "undeclared-function", f"function {term.function} is not declared")
            )
        elif len(term.args) != func.arity:
            diagnostics.append(
                error(
                    path,
                    "arity-mismatch",
                    f"{term.function} takes {func.arity} argument(s), got {len(term.args)}",
                )
            )
        for arg in term.args:
            check_term(arg, path)

    def check_knowledge(k: Knowledge, path: str) -> None:
        if resolve(model, k.owner, "entity") is None:
            diagnostics.append(error(path, "undeclared-entity", f"entity {k.owner} is not declared"))
        seen_vars: set[str] = set()
        for v in k.vars:
            if resolve(model, v.ident, "variable") is None:
                diagnostics.append(
                    error(path, "undeclared-variable", f"variable {v.ident} is not declared")
                )
            if v.ident in seen_vars:
                diagnostics.append(
                    error(path, "duplicate-knowledge-var", f"variable {v.ident} listed twice")
                )
            seen_vars.add(v.ident)

    def check_assignment(a: Assignment, path: str) -> None:
        target_decl = resolve(model, a.target, "variable")
        if target_decl is None:
            diagnostics.append(
                error(path, "undeclared-variable", f"variable {a.target} is not declared")
            )
        elif target_decl.modifier == "const":
            diagnostics.append(
                error(path, "assignment-to-constant", f"{a.target} is a constant")
            )
        if a.mode == "probabilistic":
            if not isinstance(a.source, SetRef):
                diagnostics.append(
                    error(path, "mode-source-mismatch", "probabilistic assignments sample from a set")
                )
            elif resolve(model, a.source.ident, "set") is None:
                diagnostics.append(
                    error(path, "undeclared-set", f"set {a.source.ident} is not declared")
                )
        else:
            if isinstance(a.source, SetRef):
                diagnostics.append(
                    error(path, "mode-source-mismatch", "deterministic assignments compute a term")
                )
            else:
                check_term(a.source, path)

    const_idents = {v.ident for v in model.variables if v.modifier == "const"}
    for i, eq in enumerate(model.equations, 1):
        path = f"/model/equation[{i}]"
        quantified = {v.ident for v in eq.quantified}
        for v in eq.quantified:
            if resolve(model, v.ident, "variable") is None:
                diagnostics.append(
                    error(path, "undeclared-variable", f"variable {v.ident} is not declared")
                )
        check_term(eq.lhs, path)
        check_term(eq.rhs, path)
        for side in (eq.lhs, eq.rhs):
            for v in free_variables(side):
                if v.ident not in quantified and v.ident not in const_idents:
                    diagnostics.append(
                        error(
                            path,
                            "unquantified-variable",
                            f"variable {v.ident} is neither quantified nor a constant",
                        )
                    )

    if len(proto.entities) < 2:
        diagnostics.append(
            error("/model/protocol", "too-few-entities", "a protocol needs at least two entities")
        )
    if not proto.messages:
        diagnostics.append(
            error("/model/protocol", "no-messages", "a protocol needs at least one message")
        )

    for i, e in enumerate(proto.entities, 1):
        if e.initial_knowledge is not None:
            check_knowledge(e.initial_knowledge, f"/model/protocol/entity[{i}]/knowledge[1]")

    for i, m in enumerate(proto.messages, 1):
        path = _msg_path(i)
        for endpoint in (m.sender, m.receiver):
            if resolve(model, endpoint, "entity") is None:
                diagnostics.append(
                    error(path, "undeclared-entity", f"entity {endpoint} is not declared")
                )
        if m.sender == m.receiver:
            diagnostics.append(
                error(path, "self-message", f'message from and to are both "{m.sender}"')
            )
        for j, k in enumerate(m.knowledge, 1):
            check_knowledge(k, f"{path}/knowledge[{j}]")
        for j, a in enumerate(m.pre, 1):
            check_assignment(a, f"{path}/pre/assignment[{j}]")
        for j, a in enumerate(m.post, 1):
            check_assignment(a, f"{path}/post/assignment[{j}]")
        for idx, payload in ((1, m.send_payload), (2, m.recv_payload)):
            event_path = f"{path}/event[{idx}]"
            if not payload:
                diagnostics.append(
                    error(event_path, "empty-event", "events must carry at least one variable")
                )
            for v in payload:
                decl = resolve(model, v.ident, "variable")
                if decl is None:
                    diagnostics.append(
                        error(event_path, "undeclared-variable", f"variable {v.ident} is not declared")
                    )
                elif idx == 2 and decl.modifier == "const":
                    diagnostics.append(
                        error(event_path, "receive-into-constant", f"{v.ident} is a constant")
                    )
        transforming = m.channel is not None and m.channel.content
        if not transforming and len(m.send_payload) != len(m.recv_payload):
            diagnostics.append(
                error(
                    f"{path}/event[2]",
                    "payload-length-mismatch",
                    f"sent {len(m.send_payload)} variable(s) but received {len(m.recv_payload)}",
                )
            )

    finalised_entities: set[str] = set()
    for i, fin in enumerate(proto.finalise, 1):
        path = f"/model/protocol/finalise[{i}]"
        if resolve(model, fin.entity, "entity") is None:
            diagnostics.append(error(path, "undeclared-entity", f"entity {fin.entity} is not declared"))
        if fin.entity in finalised_entities:
            diagnostics.append(
                error(path, "duplicate-finalise", f"entity {fin.entity} already has a finalise block")
            )
        finalised_entities.add(fin.entity)
        if fin.knowledge is not None:
            check_knowledge(fin.knowledge, f"{path}/knowledge[1]")
        for j, a in enumerate(fin.statements, 1):
            check_assignment(a, f"{path}/assignment[{j}]")

    for i, prop in enumerate(proto.properties, 1):
        check_term(prop.relation, f"/model/protocol/correctness[{i}]")

    return diagnostics


# ---------------------------------------------------------------------------
# typing


def type_of(model: Model, term: Term, path: str = "/model"):
    """Set identifier of a term, or a Diagnostic on a typing violation.

    Variables type as their declared set; an application types as its
    function's result set provided each argument's type equals the
    corresponding parameter set (positions are reported 1-based).
    """
    if isinstance(term, VarRef):
        decl = resolve(model, term.ident, "variable")
        if decl is None:
            return error(path, "undeclared-variable", f"variable {term.ident} is not declared")
        return decl.set_id
    func = resolve(model, term.function, "function")
    if func is None:
        return error(path, "undeclared-function", f"function {term.function} is not declared")
    if len(term.args) != func.arity:
        return error(
            path,
            "arity-mismatch",
            f"{term.function} takes {func.arity} argument(s), got {len(term.args)}",
        )
    for position, (arg, expected) in enumerate(zip(term.args, func.param_sets), 1):
        actual = type_of(model, arg, path)
        if isinstance(actual, Diagnostic):
            return actual
        if actual != expected:
            return error(
                path,
                "type-mismatch",
                f"{term.function} expects {expected} at position {position}, got {actual}",
            )
    return func.result_set


def _declared_set(model: Model, ident: str) -> str | None:
    decl = resolve(model, ident, "variable")
    return None if decl is None else decl.set_id


def check_types(model: Model) -> list[Diagnostic]:
    """Type checks over all statements, equations, events and properties."""
    diagnostics: list[Diagnostic] = []

    def result(term: Term, path: str):
        t = type_of(model, term, path)
        if isinstance(t, Diagnostic):
            diagnostics.append(t)
            return None
        return t

    def check_assignment(a: Assignment, path: str) -> None:
        target_set = _declared_set(model, a.target)
        if isinstance(a.source, SetRef):
            if target_set is not None and a.source.ident != target_set:
                diagnostics.append(
                    error(
                        path,
                        "sample-set-mismatch",
                        f"{a.target} is declared in {target_set} but sampled from {a.source.ident}",
                    )
                )
            return
        source_set = result(a.source, path)
        if source_set is not None and target_set is not None and source_set != target_set:
            diagnostics.append(
                error(
                    path,
                    "assignment-type-mismatch",
                    f"{a.target} is declared in {target_set} but assigned a {source_set} value",
                )
            )

    for i, eq in enumerate(model.equations, 1):
        path = f"/model/equation[{i}]"
        lhs = result(eq.lhs, path)
        rhs = result(eq.rhs, path)
        if lhs is not None and rhs is not None and lhs != rhs:
            diagnostics.append(
                error(path, "equation-type-mismatch", f"sides have types {lhs} and {rhs}")
            )

    for i, m in enumerate(model.protocol.messages, 1):
        path = _msg_path(i)
        for j, a in enumerate(m.pre, 1):
            check_assignment(a, f"{path}/pre/assignment[{j}]")
        for j, a in enumerate(m.post, 1):
            check_assignment(a, f"{path}/post/assignment[{j}]")
        for sent, received in zip(m.send_payload, m.recv_payload):
            sent_set = _declared_set(model, sent.ident)
            recv_set = _declared_set(model, received.ident)
            if sent_set is not None and recv_set is not None and sent_set != recv_set:
                diagnostics.append(
                    error(
                        f"{path}/event[2]",
                        "payload-type-mismatch",
                        f"{sent.ident} ({sent_set}) is received as {received.ident} ({recv_set})",
                    )
                )

    for i, fin in enumerate(model.protocol.finalise, 1):
        for j, a in enumerate(fin.statements, 1):
            check_assignment(a, f"/model/protocol/finalise[{i}]/assignment[{j}]")

    for i, prop in enumerate(model.protocol.properties, 1):
        result(prop.relation, f"/model/protocol/correctness[{i}]")

    return diagnostics


# ---------------------------------------------------------------------------
# knowledge flow


@dataclass(frozen=True)
class KnowledgeTrace:
    """Per-entity knowledge snapshots, in acquisition order.

    Labels: ``initial``, ``after-pre(i)`` (sender of message i),
    ``after-recv(i)`` and ``after-post(i)`` (receiver of message i),
    ``after-finalise``. Within an entity, each snapshot is a superset of
    the previous one.
    """

    snapshots: dict[str, tuple[tuple[str, tuple[str, ...]], ...]] = field(default_factory=dict)

    def at(self, entity: str, label: str) -> tuple[str, ...] | None:
        for snap_label, vars_ in self.snapshots.get(entity, ()):
            if snap_label == label:
                return vars_
        return None

    def final(self, entity: str) -> tuple[str, ...]:
        history = self.snapshots.get(entity, ())
        return history[-1][1] if history else ()

    def render(self) -> str:
        lines = []
        for entity, history in self.snapshots.items():
            for label, vars_ in history:
                lines.append(f"trace {entity} {label} {','.join(vars_) if vars_ else '-'}")
        return "\n".join(lines)


def _knowledge_flow(model: Model):
    """Forward pass; returns (trace, errors, warnings)."""
    errors: list[Diagnostic] = []
    warnings: list[Diagnostic] = []
    proto = model.protocol
    know: dict[str, list[str]] = {e.ident: [] for e in proto.entities}
    history: dict[str, list[tuple[str, tuple[str, ...]]]] = {e.ident: [] for e in proto.entities}

    def add(entity: str, ident: str) -> None:
        if entity in know and ident not in know[entity]:
            know[entity].append(ident)

    def snap(entity: str, label: str) -> None:
        if entity in history:
            history[entity].append((label, tuple(know[entity])))

    def check_annotation(k: Knowledge, path: str) -> None:
        if k.owner not in know:
            return
        annotated = {v.ident for v in k.vars}
        computed = set(know[k.owner])
        if annotated != computed:
            missing = ",".join(sorted(computed - annotated)) or "-"
            extra = ",".join(sorted(annotated - computed)) or "-"
            warnings.append(
                warning(
                    path,
                    "knowledge-annotation-mismatch",
                    f"computed knowledge of {k.owner} disagrees (missing: {missing}, extra: {extra})",
                )
            )

    def run_statements(entity: str, statements, path_of, i: int) -> None:
        for j, a in enumerate(statements, 1):
            for ref in assignment_sources(a):
                if entity in know and ref.ident not in know[entity]:
                    errors.append(
                        error(
                            path_of(j),
                            "unknown-variable-in-statement",
                            f"{entity} does not know {ref.ident} in message {i}" if i else f"{entity} does not know {ref.ident}",
                        )
                    )
            add(entity, a.target)

    for e in proto.entities:
        if e.initial_knowledge is not None:
            for v in e.initial_knowledge.vars:
                add(e.ident, v.ident)
        snap(e.ident, "initial")

    for i, m in enumerate(proto.messages, 1):
        path = _msg_path(i)
        for j, k in enumerate(m.knowledge, 1):
            check_annotation(k, f"{path}/knowledge[{j}]")
        run_statements(m.sender, m.pre, lambda j: f"{path}/pre/assignment[{j}]", i)
        snap(m.sender, f"after-pre({i})")
        for v in m.send_payload:
            if m.sender in know and v.ident not in know[m.sender]:
                errors.append(
                    error(
                        f"{path}/event[1]",
                        "send-of-unknown-variable",
                        f"{m.sender} does not know {v.ident} when sending message {i}",
                    )
                )
        for v in m.recv_payload:
            add(m.receiver, v.ident)
        snap(m.receiver, f"after-recv({i})")
        run_statements(m.receiver, m.post, lambda j: f"{path}/post/assignment[{j}]", i)
        snap(m.receiver, f"after-post({i})")

    for i, fin in enumerate(proto.finalise, 1):
        path = f"/model/protocol/finalise[{i}]"
        if fin.knowledge is not None:
            check_annotation(fin.knowledge, f"{path}/knowledge[1]")
        run_statements(fin.entity, fin.statements, lambda j: f"{path}/assignment[{j}]", 0)
        snap(fin.entity, "after-finalise")

    trace = KnowledgeTrace({entity: tuple(snaps) for entity, snaps in history.items()})
    return trace, errors, warnings


def knowledge_trace(model: Model):
    """KnowledgeTrace on success, or the list of knowledge-flow errors."""
    trace, errors, _ = _knowledge_flow(model)
    return errors if errors else trace


# ---------------------------------------------------------------------------
# aggregation


def check_semantics(model: Model) -> list[Diagnostic]:
    """All semantic checks, in document order; empty means exportable."""
    diagnostics = check_declarations(model) + check_references(model)
    if any(d.severity == "error" for d in diagnostics):
        return document_order(diagnostics)
    diagnostics += check_types(model)
    if any(d.severity == "error" for d in diagnostics):
        return document_order(diagnostics)
    _, flow_errors, flow_warnings = _knowledge_flow(model)
    diagnostics += flow_errors + flow_warnings
    return document_order(diagnostics)
