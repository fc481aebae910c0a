"""In-memory protocol model: declarations, terms, messages, protocol.

Every cross-reference is stored as an identifier string and resolved against
the enclosing :class:`Model` with :func:`resolve`; this lets a structurally
complete model with dangling references exist long enough for the validator
to diagnose it. All values are immutable after construction and safe to
share across concurrent exporter runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

VAR_MODIFIERS = ("nonce", "const", "entity", "var")
CHANNEL_MODIFIERS = ("insecure", "auth", "secure")
NAMESPACES = ("set", "function", "variable", "entity", "channel")

DEFAULT_SECURITY_PARAMETER = 512


@dataclass(frozen=True)
class VarRef:
    """Occurrence of a variable, optionally tagged with a modifier."""

    ident: str
    modifier: str | None = None


@dataclass(frozen=True)
class Application:
    """Function application; arguments are terms, nested to any depth."""

    function: str
    args: tuple["Term", ...] = ()


Term = VarRef | Application


@dataclass(frozen=True)
class SetRef:
    """Reference to a declared set, used as the source of probabilistic sampling."""

    ident: str


@dataclass(frozen=True)
class SetDecl:
    ident: str
    element_sets: tuple[str, ...] = ()
    hint: str | None = None


@dataclass(frozen=True)
class FuncDecl:
    ident: str
    arity: int
    param_sets: tuple[str, ...] = ()
    result_set: str = ""
    hint: str | None = None


@dataclass(frozen=True)
class VarDecl:
    var: VarRef
    set_id: str
    scope: str | None = None  # entity id; None means globally declared
    hint: str | None = None

    @property
    def ident(self) -> str:
        return self.var.ident

    @property
    def modifier(self) -> str | None:
        return self.var.modifier

    @property
    def is_global_const(self) -> bool:
        return self.scope is None and self.var.modifier == "const"


@dataclass(frozen=True)
class Equation:
    ident: str
    quantified: tuple[VarRef, ...]
    lhs: Application
    rhs: Term


@dataclass(frozen=True)
class Knowledge:
    owner: str
    vars: tuple[VarRef, ...] = ()


@dataclass(frozen=True)
class Entity:
    ident: str
    initial_knowledge: Knowledge | None = None


@dataclass(frozen=True)
class Channel:
    """Channel of a message; an absent channel element denotes the generic
    insecure channel. Channel content (transforming applications) is parsed
    and preserved but never interpreted."""

    ident: str | None = None
    modifier: str = "insecure"
    content: tuple[Application, ...] = ()

    @property
    def is_generic(self) -> bool:
        return self.ident is None


@dataclass(frozen=True)
class Assignment:
    target: str
    mode: str  # "deterministic" | "probabilistic"
    source: Term | SetRef

    @property
    def is_probabilistic(self) -> bool:
        return self.mode == "probabilistic"


@dataclass(frozen=True)
class Message:
    sender: str
    receiver: str
    knowledge: tuple[Knowledge, ...] = ()
    pre: tuple[Assignment, ...] = ()
    send_payload: tuple[VarRef, ...] = ()
    channel: Channel | None = None
    recv_payload: tuple[VarRef, ...] = ()
    post: tuple[Assignment, ...] = ()


@dataclass(frozen=True)
class Finalise:
    entity: str
    knowledge: Knowledge | None = None
    statements: tuple[Assignment, ...] = ()


@dataclass(frozen=True)
class CorrectnessProperty:
    relation: Application


@dataclass(frozen=True)
class Protocol:
    entities: tuple[Entity, ...] = ()
    messages: tuple[Message, ...] = ()
    finalise: tuple[Finalise, ...] = ()
    properties: tuple[CorrectnessProperty, ...] = ()


@dataclass(frozen=True)
class Model:
    ident: str
    sets: tuple[SetDecl, ...] = ()
    functions: tuple[FuncDecl, ...] = ()
    variables: tuple[VarDecl, ...] = ()
    equations: tuple[Equation, ...] = ()
    protocol: Protocol = field(default_factory=Protocol)
    security: int = DEFAULT_SECURITY_PARAMETER


def channels_of(model: Model) -> list[Channel]:
    """Named channels in document order (first occurrence per id)."""
    seen: dict[str, Channel] = {}
    for message in model.protocol.messages:
        ch = message.channel
        if ch is not None and ch.ident is not None and ch.ident not in seen:
            seen[ch.ident] = ch
    return list(seen.values())


def resolve(model: Model, ident: str, namespace: str):
    """Look up the unique declaration of ``ident`` in ``namespace``.

    Returns the declaration, or None when the identifier is not declared
    (the validator turns that into a diagnostic). At most one declaration
    exists per (identifier, namespace) in a valid model; on duplicates the
    first one in document order wins.
    """
    if namespace == "set":
        for s in model.sets:
            if s.ident == ident:
                return s
    elif namespace == "function":
        for f in model.functions:
            if f.ident == ident:
                return f
    elif namespace == "variable":
        for v in model.variables:
            if v.ident == ident:
                return v
    elif namespace == "entity":
        for e in model.protocol.entities:
            if e.ident == ident:
                return e
    elif namespace == "channel":
        for ch in channels_of(model):
            if ch.ident == ident:
                return ch
    else:
        raise ValueError(f"unknown namespace: {namespace!r}")
    return None


def free_variables(term: Term) -> list[VarRef]:
    """Left-to-right, duplicate-free list of every variable occurring in ``term``."""
    seen: set[str] = set()
    out: list[VarRef] = []

    def walk(t: Term) -> None:
        if isinstance(t, VarRef):
            if t.ident not in seen:
                seen.add(t.ident)
                out.append(t)
        else:
            for arg in t.args:
                walk(arg)

    walk(term)
    return out


def iter_applications(term: Term):
    """All application nodes of a term, outermost first."""
    if isinstance(term, Application):
        yield term
        for arg in term.args:
            yield from iter_applications(arg)


def assignment_sources(assignment: Assignment) -> list[VarRef]:
    """Variables an assignment reads (none for probabilistic sampling)."""
    if isinstance(assignment.source, SetRef):
        return []
    return free_variables(assignment.source)
