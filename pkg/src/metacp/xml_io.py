"""Bidirectional mapping between PSV XML documents and Model values.

The structural grammar lives in two places that must agree: the shipped
``formats/psv.dtd`` (the normative, human-readable statement) and the
tables below that drive :func:`validate_structure`. Structure checks stop
at element nesting and attribute shape; anything involving cross-references
is the validator's job.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from xml.etree import ElementTree

from .diagnostics import Diagnostic, ParseError, error
from .model import (
    Application,
    Assignment,
    Channel,
    CorrectnessProperty,
    DEFAULT_SECURITY_PARAMETER,
    Entity,
    Equation,
    Finalise,
    FuncDecl,
    Knowledge,
    Message,
    Model,
    Protocol,
    SetDecl,
    SetRef,
    Term,
    VarDecl,
    VarRef,
)

IDENT_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")

# Canonical attribute order; attributes seen in the reference listings come
# first, in the order they appear there, the rest follow in a fixed order.
ATTRIBUTE_ORDER = (
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
)

# element -> regex over the comma-joined child tag sequence
CONTENT_MODELS = {
    "model": r"(set,)*(function,)*(declaration,)*(equation,)*protocol,",
    "set": r"(set,)*",
    "function": r"(set,)*",
    "declaration": r"",
    "equation": r"(variable,)*application,(?:variable,|application,)",
    # entity and message counts are semantic minimums, not structural ones
    "protocol": r"(entity,)*(message,)*(finalise,)*(correctness,)*",
    "entity": r"(knowledge,)?",
    "knowledge": r"(variable,)*",
    "message": r"(knowledge,)*(pre,)?event,(channel,)?event,(post,)?",
    "pre": r"(assignment,)*",
    "post": r"(assignment,)*",
    "event": r"(variable,)*",
    "channel": r"(application,)*",
    "assignment": r"(?:variable,|application,|set,)",
    "application": r"(?:argument,|application,)*",
    "argument": r"",
    "variable": r"",
    "finalise": r"(knowledge,)?(assignment,)*",
    "correctness": r"application,",
}

CONTENT_MODEL_HINTS = {
    "model": "set*, function*, declaration*, equation*, protocol",
    "set": "set*",
    "function": "set*",
    "declaration": "empty",
    "equation": "variable*, application, (variable | application)",
    "protocol": "entity*, message*, finalise*, correctness*",
    "entity": "knowledge?",
    "knowledge": "variable*",
    "message": "knowledge*, pre?, event, channel?, event, post?",
    "pre": "assignment*",
    "post": "assignment*",
    "event": "variable*",
    "channel": "application*",
    "assignment": "(variable | application | set)",
    "application": "(argument | application)*",
    "argument": "empty",
    "variable": "empty",
    "finalise": "knowledge?, assignment*",
    "correctness": "application",
}

_IDENT = "ident"
_TEXT = "text"
_NONNEG = "nonneg"
_POSITIVE = "positive"

VAR_MODIFIER_VALUES = ("nonce", "const", "entity", "var")
CHANNEL_TYPE_VALUES = ("insecure", "auth", "secure")
EVENT_TYPE_VALUES = ("send", "receive")
ASSIGNMENT_TYPE_VALUES = ("deterministic", "probabilistic")

# element -> (required attrs, optional attrs); value is validation kind
ATTRIBUTES: dict[str, tuple[dict, dict]] = {
    "model": ({"id": _IDENT}, {"security": _POSITIVE}),
    "set": ({"id": _IDENT}, {"hint": _TEXT}),
    "function": ({"id": _IDENT, "arity": _NONNEG}, {"hint": _TEXT}),
    "declaration": (
        {"variable": _IDENT, "set": _IDENT},
        {"modifier": VAR_MODIFIER_VALUES, "entity": _IDENT, "hint": _TEXT},
    ),
    "equation": ({"id": _IDENT}, {}),
    "protocol": ({}, {}),
    "entity": ({"id": _IDENT}, {}),
    "knowledge": ({"entity": _IDENT}, {}),
    "message": ({"from": _IDENT, "to": _IDENT}, {}),
    "pre": ({}, {}),
    "post": ({}, {}),
    "event": ({"type": EVENT_TYPE_VALUES}, {}),
    "channel": ({}, {"id": _IDENT, "type": CHANNEL_TYPE_VALUES}),
    "assignment": ({"variable": _IDENT, "type": ASSIGNMENT_TYPE_VALUES}, {}),
    "application": ({"function": _IDENT}, {}),
    "argument": ({"id": _IDENT}, {"modifier": VAR_MODIFIER_VALUES}),
    "variable": ({"id": _IDENT}, {"modifier": VAR_MODIFIER_VALUES}),
    "finalise": ({"entity": _IDENT}, {}),
    "correctness": ({}, {}),
}

_REPEATABLE = {
    "set",
    "function",
    "declaration",
    "equation",
    "entity",
    "message",
    "finalise",
    "correctness",
    "knowledge",
    "assignment",
    "variable",
    "argument",
    "application",
    "event",
}


@dataclass(frozen=True)
class SourceDocument:
    """A PSV document as UTF-8 XML bytes."""

    data: bytes

    def text(self) -> str:
        return self.data.decode("utf-8")


def _child_path(parent_path: str, tag: str, index: int) -> str:
    if tag in _REPEATABLE:
        return f"{parent_path}/{tag}[{index}]"
    return f"{parent_path}/{tag}"


def _read_root(doc: SourceDocument) -> ElementTree.Element:
    try:
        return ElementTree.fromstring(doc.data)
    except ElementTree.ParseError as exc:
        raise ParseError([error("/", "malformed-xml", str(exc))]) from exc


def validate_structure(doc: SourceDocument) -> list[Diagnostic]:
    """Check the document against the structural grammar (psv.dtd).

    Semantic relationships (declared-before-use, typing, knowledge) are out
    of scope here and checked by the validator on the parsed model.
    """
    root = _read_root(doc)
    diagnostics: list[Diagnostic] = []
    if root.tag != "model":
        diagnostics.append(
            error("/", "bad-root", f"root element must be model, got {root.tag}")
        )
        return diagnostics
    _check_element(root, "/model", diagnostics, parent_tag=None)
    return diagnostics


def _check_element(
    elem: ElementTree.Element,
    path: str,
    diagnostics: list[Diagnostic],
    parent_tag: str | None,
) -> None:
    tag = elem.tag
    if tag not in CONTENT_MODELS:
        diagnostics.append(error(path, "unknown-element", f"element {tag} is not part of the grammar"))
        return

    _check_attributes(elem, path, diagnostics)

    if elem.text and elem.text.strip():
        diagnostics.append(error(path, "unexpected-text", "elements carry data in attributes only"))

    children = list(elem)
    sequence = "".join(child.tag + "," for child in children)
    if not re.fullmatch(CONTENT_MODELS[tag], sequence):
        got = ", ".join(child.tag for child in children) or "nothing"
        diagnostics.append(
            error(
                path,
                "content-model",
                f"{tag} contains ({got}) but the grammar requires ({CONTENT_MODEL_HINTS[tag]})",
            )
        )

    if tag == "message":
        _check_event_order(children, path, diagnostics)

    # set elements declare only as direct children of model; everywhere else
    # they are references and must be bare
    if tag == "set" and parent_tag not in (None, "model"):
        if list(elem) or elem.get("hint") is not None:
            diagnostics.append(
                error(path, "bad-set-reference", "a set reference carries only an id")
            )

    if tag == "channel" and elem.get("type") is not None and elem.get("id") is None:
        diagnostics.append(
            error(path, "channel-missing-id", "a channel modifier requires a named channel")
        )

    counters: dict[str, int] = {}
    for child in children:
        counters[child.tag] = counters.get(child.tag, 0) + 1
        _check_element(
            child,
            _child_path(path, child.tag, counters[child.tag]),
            diagnostics,
            parent_tag=tag,
        )
        if child.tail and child.tail.strip():
            diagnostics.append(error(path, "unexpected-text", "elements carry data in attributes only"))


def _check_attributes(elem: ElementTree.Element, path: str, diagnostics: list[Diagnostic]) -> None:
    required, optional = ATTRIBUTES[elem.tag]
    for name in required:
        if elem.get(name) is None:
            diagnostics.append(
                error(path, "missing-attribute", f"{elem.tag} requires attribute {name}")
            )
    for name, value in elem.attrib.items():
        kind = required.get(name, optional.get(name))
        if kind is None:
            diagnostics.append(
                error(path, "unknown-attribute", f"{elem.tag} does not allow attribute {name}")
            )
            continue
        if kind == _IDENT:
            if not IDENT_RE.match(value):
                diagnostics.append(
                    error(path, "bad-identifier", f"{name}={value!r} is not a valid identifier")
                )
        elif kind == _NONNEG:
            if not value.isdigit():
                diagnostics.append(
                    error(path, "bad-attribute", f"{name} must be a non-negative integer")
                )
        elif kind == _POSITIVE:
            if not value.isdigit() or int(value) == 0:
                diagnostics.append(
                    error(path, "bad-attribute", f"{name} must be a positive integer")
                )
        elif kind == _TEXT:
            if not value.strip():
                diagnostics.append(error(path, "bad-attribute", f"{name} must be non-empty"))
        else:  # enumerated values
            if value not in kind:
                diagnostics.append(
                    error(
                        path,
                        "bad-attribute",
                        f"{name}={value!r} not one of {', '.join(kind)}",
                    )
                )


def _check_event_order(
    children: list[ElementTree.Element], path: str, diagnostics: list[Diagnostic]
) -> None:
    events = [c for c in children if c.tag == "event"]
    if len(events) != 2:
        return  # the content model diagnostic already covers this
    if events[0].get("type") == "receive":
        diagnostics.append(
            error(f"{path}/event[1]", "missing-send-event", "the first event of a message must send")
        )
    if events[1].get("type") == "send":
        diagnostics.append(
            error(f"{path}/event[2]", "missing-receive-event", "the second event of a message must receive")
        )


# ---------------------------------------------------------------------------
# parsing


def build_model(doc: SourceDocument) -> Model:
    """Construct the Model of a structurally valid document without any
    reference checking; dangling identifiers survive for the validator."""
    return _build_model(_read_root(doc))


def parse(doc: SourceDocument) -> Model:
    """Parse a PSV document into a Model.

    Raises :class:`ParseError` carrying diagnostics when the document is
    malformed, violates the structural grammar, or breaks model invariants
    (dangling references, duplicate identifiers, self-messages, ...).
    Typing and knowledge-flow problems are left to ``check_semantics``.
    """
    from . import validator  # deferred: validator builds on the model layer

    structural = validate_structure(doc)
    if structural:
        raise ParseError(structural)
    model = build_model(doc)
    wellformed = validator.check_declarations(model) + validator.check_references(model)
    errors = [d for d in wellformed if d.severity == "error"]
    if errors:
        raise ParseError(errors)
    return model


def _build_model(root: ElementTree.Element) -> Model:
    sets = []
    functions = []
    variables = []
    equations = []
    protocol = Protocol()
    for child in root:
        if child.tag == "set":
            sets.append(
                SetDecl(
                    ident=child.get("id"),
                    element_sets=tuple(ref.get("id") for ref in child),
                    hint=child.get("hint"),
                )
            )
        elif child.tag == "function":
            refs = [ref.get("id") for ref in child]
            functions.append(
                FuncDecl(
                    ident=child.get("id"),
                    arity=int(child.get("arity")),
                    param_sets=tuple(refs[:-1]) if refs else (),
                    result_set=refs[-1] if refs else "",
                    hint=child.get("hint"),
                )
            )
        elif child.tag == "declaration":
            variables.append(
                VarDecl(
                    var=VarRef(child.get("variable"), child.get("modifier")),
                    set_id=child.get("set"),
                    scope=child.get("entity"),
                    hint=child.get("hint"),
                )
            )
        elif child.tag == "equation":
            equations.append(_build_equation(child))
        elif child.tag == "protocol":
            protocol = _build_protocol(child)
    return Model(
        ident=root.get("id"),
        sets=tuple(sets),
        functions=tuple(functions),
        variables=tuple(variables),
        equations=tuple(equations),
        protocol=protocol,
        security=int(root.get("security", DEFAULT_SECURITY_PARAMETER)),
    )


def _build_equation(elem: ElementTree.Element) -> Equation:
    children = list(elem)
    quantified = []
    terms: list[Term] = []
    for child in children:
        if child.tag == "variable" and not terms:
            quantified.append(_build_varref(child))
        else:
            terms.append(_build_term(child))
    return Equation(
        ident=elem.get("id"),
        quantified=tuple(quantified),
        lhs=terms[0],
        rhs=terms[1],
    )


def _build_varref(elem: ElementTree.Element) -> VarRef:
    return VarRef(elem.get("id"), elem.get("modifier"))


def _build_term(elem: ElementTree.Element) -> Term:
    if elem.tag in ("variable", "argument"):
        return _build_varref(elem)
    return Application(
        function=elem.get("function"),
        args=tuple(_build_term(child) for child in elem),
    )


def _build_knowledge(elem: ElementTree.Element) -> Knowledge:
    return Knowledge(
        owner=elem.get("entity"),
        vars=tuple(_build_varref(v) for v in elem),
    )


def _build_assignment(elem: ElementTree.Element) -> Assignment:
    child = list(elem)[0]
    source: Term | SetRef
    if child.tag == "set":
        source = SetRef(child.get("id"))
    else:
        source = _build_term(child)
    return Assignment(target=elem.get("variable"), mode=elem.get("type"), source=source)


def _build_protocol(elem: ElementTree.Element) -> Protocol:
    entities = []
    messages = []
    finalise = []
    properties = []
    for child in elem:
        if child.tag == "entity":
            knowledge = None
            for sub in child:
                built = _build_knowledge(sub)
                if built.vars:
                    knowledge = built
            entities.append(Entity(ident=child.get("id"), initial_knowledge=knowledge))
        elif child.tag == "message":
            messages.append(_build_message(child))
        elif child.tag == "finalise":
            built_fin = _build_finalise(child)
            if built_fin.knowledge is not None or built_fin.statements:
                finalise.append(built_fin)
        elif child.tag == "correctness":
            properties.append(CorrectnessProperty(relation=_build_term(list(child)[0])))
    return Protocol(
        entities=tuple(entities),
        messages=tuple(messages),
        finalise=tuple(finalise),
        properties=tuple(properties),
    )


def _build_message(elem: ElementTree.Element) -> Message:
    knowledge = []
    pre: tuple[Assignment, ...] = ()
    post: tuple[Assignment, ...] = ()
    payloads: list[tuple[VarRef, ...]] = []
    channel = None
    for child in elem:
        if child.tag == "knowledge":
            knowledge.append(_build_knowledge(child))
        elif child.tag == "pre":
            pre = tuple(_build_assignment(a) for a in child)
        elif child.tag == "post":
            post = tuple(_build_assignment(a) for a in child)
        elif child.tag == "event":
            payloads.append(tuple(_build_varref(v) for v in child))
        elif child.tag == "channel":
            if child.get("id") is not None or len(child):
                channel = Channel(
                    ident=child.get("id"),
                    modifier=child.get("type", "insecure"),
                    content=tuple(_build_term(a) for a in child),
                )
    return Message(
        sender=elem.get("from"),
        receiver=elem.get("to"),
        knowledge=tuple(knowledge),
        pre=pre,
        send_payload=payloads[0],
        channel=channel,
        recv_payload=payloads[1],
        post=post,
    )


def _build_finalise(elem: ElementTree.Element) -> Finalise:
    knowledge = None
    statements = []
    for child in elem:
        if child.tag == "knowledge":
            built = _build_knowledge(child)
            if built.vars:
                knowledge = built
        else:
            statements.append(_build_assignment(child))
    return Finalise(entity=elem.get("entity"), knowledge=knowledge, statements=tuple(statements))


# ---------------------------------------------------------------------------
# serialization


def serialize(model: Model) -> SourceDocument:
    """Canonical byte serialization: 2-space indent, fixed attribute order,
    UTF-8 without BOM. Empty optional elements (finalise without statements,
    knowledge without variables) are omitted, matching what parse produces,
    so ``parse(serialize(m)) == m`` for every parseable model."""
    writer = _Writer()
    writer.open("model", _attrs(id=model.ident, security=_security_attr(model)))
    for s in model.sets:
        _write_set_decl(writer, s)
    for f in model.functions:
        _write_function(writer, f)
    for v in model.variables:
        writer.leaf(
            "declaration",
            _attrs(
                variable=v.var.ident,
                entity=v.scope,
                set=v.set_id,
                modifier=v.var.modifier,
                hint=v.hint,
            ),
        )
    for eq in model.equations:
        _write_equation(writer, eq)
    _write_protocol(writer, model.protocol)
    writer.close("model")
    return SourceDocument(writer.bytes())


def _security_attr(model: Model) -> str:
    return str(model.security)


class _Writer:
    def __init__(self) -> None:
        self.lines = ['<?xml version="1.0" encoding="UTF-8"?>']
        self.depth = 0

    def _render(self, tag: str, attrs: list[tuple[str, str]]) -> str:
        parts = [tag] + [f'{name}="{_escape(value)}"' for name, value in attrs]
        return " ".join(parts)

    def open(self, tag: str, attrs: list[tuple[str, str]]) -> None:
        self.lines.append("  " * self.depth + f"<{self._render(tag, attrs)}>")
        self.depth += 1

    def close(self, tag: str) -> None:
        self.depth -= 1
        self.lines.append("  " * self.depth + f"</{tag}>")

    def leaf(self, tag: str, attrs: list[tuple[str, str]]) -> None:
        self.lines.append("  " * self.depth + f"<{self._render(tag, attrs)}/>")

    def bytes(self) -> bytes:
        return ("\n".join(self.lines) + "\n").encode("utf-8")


def _escape(value: str) -> str:
    return (
        value.replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
    )


def _attrs(**kwargs) -> list[tuple[str, str]]:
    present = {name: value for name, value in kwargs.items() if value is not None}
    ordered = [(name, present[name]) for name in ATTRIBUTE_ORDER if name in present]
    assert len(ordered) == len(present), "attribute missing from ATTRIBUTE_ORDER"
    return ordered


def _write_set_decl(writer: _Writer, s: SetDecl) -> None:
    attrs = _attrs(id=s.ident, hint=s.hint)
    if not s.element_sets:
        writer.leaf("set", attrs)
        return
    writer.open("set", attrs)
    for ref in s.element_sets:
        writer.leaf("set", _attrs(id=ref))
    writer.close("set")


def _write_function(writer: _Writer, f: FuncDecl) -> None:
    attrs = _attrs(id=f.ident, arity=str(f.arity), hint=f.hint)
    refs = list(f.param_sets) + ([f.result_set] if f.result_set else [])
    if not refs:
        writer.leaf("function", attrs)
        return
    writer.open("function", attrs)
    for ref in refs:
        writer.leaf("set", _attrs(id=ref))
    writer.close("function")


def _write_varref(writer: _Writer, v: VarRef, tag: str = "variable") -> None:
    writer.leaf(tag, _attrs(id=v.ident, modifier=v.modifier))


def _write_term(writer: _Writer, term: Term, ref_tag: str) -> None:
    if isinstance(term, VarRef):
        _write_varref(writer, term, ref_tag)
        return
    attrs = _attrs(function=term.function)
    if not term.args:
        writer.leaf("application", attrs)
        return
    writer.open("application", attrs)
    for arg in term.args:
        _write_term(writer, arg, "argument")
    writer.close("application")


def _write_equation(writer: _Writer, eq: Equation) -> None:
    writer.open("equation", _attrs(id=eq.ident))
    for v in eq.quantified:
        _write_varref(writer, v)
    _write_term(writer, eq.lhs, "variable")
    _write_term(writer, eq.rhs, "variable")
    writer.close("equation")


def _write_knowledge(writer: _Writer, k: Knowledge) -> None:
    if not k.vars:
        return
    writer.open("knowledge", _attrs(entity=k.owner))
    for v in k.vars:
        _write_varref(writer, v)
    writer.close("knowledge")


def _write_assignment(writer: _Writer, a: Assignment) -> None:
    writer.open("assignment", _attrs(type=a.mode, variable=a.target))
    if isinstance(a.source, SetRef):
        writer.leaf("set", _attrs(id=a.source.ident))
    else:
        _write_term(writer, a.source, "variable")
    writer.close("assignment")


def _write_statement_block(writer: _Writer, tag: str, statements) -> None:
    if not statements:
        writer.leaf(tag, [])
        return
    writer.open(tag, [])
    for a in statements:
        _write_assignment(writer, a)
    writer.close(tag)


def _write_protocol(writer: _Writer, protocol: Protocol) -> None:
    writer.open("protocol", [])
    for e in protocol.entities:
        if e.initial_knowledge is None:
            writer.leaf("entity", _attrs(id=e.ident))
        else:
            writer.open("entity", _attrs(id=e.ident))
            _write_knowledge(writer, e.initial_knowledge)
            writer.close("entity")
    for m in protocol.messages:
        _write_message(writer, m)
    for fin in protocol.finalise:
        if fin.knowledge is None and not fin.statements:
            continue
        writer.open("finalise", _attrs(entity=fin.entity))
        if fin.knowledge is not None:
            _write_knowledge(writer, fin.knowledge)
        for a in fin.statements:
            _write_assignment(writer, a)
        writer.close("finalise")
    for prop in protocol.properties:
        writer.open("correctness", [])
        _write_term(writer, prop.relation, "argument")
        writer.close("correctness")
    writer.close("protocol")


def _write_message(writer: _Writer, m: Message) -> None:
    writer.open("message", _attrs(**{"from": m.sender, "to": m.receiver}))
    for k in m.knowledge:
        _write_knowledge(writer, k)
    _write_statement_block(writer, "pre", m.pre)
    _write_event(writer, "send", m.send_payload)
    _write_channel(writer, m.channel)
    _write_event(writer, "receive", m.recv_payload)
    _write_statement_block(writer, "post", m.post)
    writer.close("message")


def _write_event(writer: _Writer, kind: str, payload) -> None:
    if not payload:
        writer.leaf("event", _attrs(type=kind))
        return
    writer.open("event", _attrs(type=kind))
    for v in payload:
        _write_varref(writer, v)
    writer.close("event")


def _write_channel(writer: _Writer, channel: Channel | None) -> None:
    if channel is None:
        writer.leaf("channel", [])
        return
    attrs = _attrs(type=channel.modifier, id=channel.ident)
    if not channel.content:
        writer.leaf("channel", attrs)
        return
    writer.open("channel", attrs)
    for app in channel.content:
        _write_term(writer, app, "variable")
    writer.close("channel")
