"""Refinement of a validated model into a multiset-rewriting theory.

One rule per (entity, message-role): a send role folds the message's pre
statements, a receive role its post statements. Probabilistic assignments
become Fresh-fact premises, deterministic ones rule-local let bindings,
payloads In/Out facts. Per-entity state facts ``St_<Entity>_<k>`` thread
acquired knowledge between an entity's consecutive roles; globally declared
constants appear as public names instead of being threaded. Finalise
statements fold into the entity's last rule. Every rule carries one
distinct action label, and an exists-trace lemma asserts that all labels
can occur in protocol order.

When the model carries the modular-exponentiation group structure plus the
commutativity equation, the theory uses the built-in Diffie-Hellman
equational theory instead of raw equations.
"""

from __future__ import annotations

from dataclasses import dataclass

from .diagnostics import Diagnostic, ExportError
from .groups import commutativity_equation, detect_group
from .model import (
    Application,
    Assignment,
    Entity,
    Message,
    Model,
    SetRef,
    Term,
    VarRef,
    resolve,
)
from .validator import check_semantics

RESERVED = frozenset(
    """
    all builtins begin end equations exists functions heuristic in and
    lemma let not restriction rule section subsection text theory axiom
    """.split()
)

_ATOM_CHARS = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_~'")


@dataclass(frozen=True)
class TheoryText:
    header: str
    builtins: str
    rules: str
    lemma: str

    @property
    def text(self) -> str:
        return self.header + self.builtins + self.rules + self.lemma


def sanitize(ident: str) -> str:
    return ident + "_v" if ident in RESERVED else ident


def fact_name(ident: str) -> str:
    ident = sanitize(ident)
    return ident[0].upper() + ident[1:]


@dataclass(frozen=True)
class Role:
    entity: str
    message_index: int  # 1-based
    kind: str  # "send" | "recv"
    message: Message

    @property
    def label(self) -> str:
        return fact_name(f"{self.entity}_{self.message_index}_{self.kind}")


def protocol_roles(model: Model) -> list[Role]:
    """(entity, message-role) occurrences in protocol order, sender first."""
    roles = []
    for i, m in enumerate(model.protocol.messages, 1):
        roles.append(Role(m.sender, i, "send", m))
        roles.append(Role(m.receiver, i, "recv", m))
    return roles


class _TheoryBuilder:
    def __init__(self, model: Model):
        self.model = model
        self.dh_equation = None
        self.dh_function = None
        group = detect_group(model)
        if not isinstance(group, Diagnostic):
            equation = commutativity_equation(model, group)
            if equation is not None:
                self.dh_equation = equation
                self.dh_function = group.exp_function.ident
        self.const_idents = {v.ident for v in model.variables if v.is_global_const}
        # per-entity rendering of variable occurrences (~nonce, plain, 'public')
        self.names: dict[str, dict[str, str]] = {}
        # per-entity threaded state items, in acquisition order
        self.state: dict[str, list[str]] = {}
        self.role_counter: dict[str, int] = {}
        for e in model.protocol.entities:
            names: dict[str, str] = {}
            if e.initial_knowledge is not None:
                for ref in e.initial_knowledge.vars:
                    names[ref.ident] = f"'{sanitize(ref.ident)}'"
            self.names[e.ident] = names
            self.state[e.ident] = []
            self.role_counter[e.ident] = 0

    # -- term rendering -----------------------------------------------------

    def render_var(self, entity: str, ident: str) -> str:
        if ident in self.const_idents:
            return f"'{sanitize(ident)}'"
        return self.names[entity].get(ident, sanitize(ident))

    def render_term(self, entity: str, term: Term) -> str:
        if isinstance(term, VarRef):
            return self.render_var(entity, term.ident)
        if term.function == self.dh_function and len(term.args) == 2:
            base, exponent = (self.render_term(entity, a) for a in term.args)
            return f"{_atom(base)}^{_atom(exponent)}"
        args = ", ".join(self.render_term(entity, a) for a in term.args)
        return f"{sanitize(term.function)}({args})"

    def render_equation_term(self, term: Term) -> str:
        if isinstance(term, VarRef):
            if term.ident in self.const_idents:
                return f"'{sanitize(term.ident)}'"
            return sanitize(term.ident)
        args = ", ".join(self.render_equation_term(a) for a in term.args)
        return f"{sanitize(term.function)}({args})"

    # -- signature ----------------------------------------------------------

    def signature_block(self) -> str:
        lines = []
        if self.dh_equation is not None:
            lines.append("builtins: diffie-hellman")
        functions = [
            f"{sanitize(f.ident)}/{f.arity}"
            for f in self.model.functions
            if f.ident != self.dh_function
        ]
        if functions:
            lines.append("functions: " + ", ".join(functions))
        equations = [
            f"{self.render_equation_term(eq.lhs)} = {self.render_equation_term(eq.rhs)}"
            for eq in self.model.equations
            if eq is not self.dh_equation
        ]
        if equations:
            lines.append("equations: " + ", ".join(equations))
        if not lines:
            return ""
        return "\n" + "\n\n".join(lines) + "\n"

    # -- rules ----------------------------------------------------------------

    def statement_effects(self, entity: str, statements) -> tuple[list[str], list[str]]:
        """Returns (let bindings, Fr facts); updates names and state."""
        lets: list[str] = []
        fresh: list[str] = []
        for a in statements:
            if isinstance(a.source, SetRef):
                marked = "~" + sanitize(a.target)
                fresh.append(f"Fr({marked})")
                self.names[entity][a.target] = marked
                self.state[entity].append(marked)
            else:
                rendered = self.render_term(entity, a.source)
                name = sanitize(a.target)
                lets.append(f"{name} = {rendered}")
                self.names[entity][a.target] = name
                self.state[entity].append(name)
        return lets, fresh

    def emit_rule(self, role: Role, is_last_for_entity: bool) -> str:
        entity = role.entity
        previous_index = self.role_counter[entity]
        previous_state = list(self.state[entity])

        premises: list[str] = []
        if previous_index > 0:
            premises.append(f"St_{fact_name(entity)}_{previous_index}({', '.join(previous_state)})")

        lets: list[str] = []
        fresh: list[str] = []
        io_fact = None
        if role.kind == "send":
            lets, fresh = self.statement_effects(entity, role.message.pre)
            payload = [self.render_var(entity, v.ident) for v in role.message.send_payload]
            io_fact = f"Out({_tuple(payload)})"
        else:
            for v in role.message.recv_payload:
                name = sanitize(v.ident)
                self.names[entity][v.ident] = name
                self.state[entity].append(name)
            payload = [self.render_var(entity, v.ident) for v in role.message.recv_payload]
            premises.append(f"In({_tuple(payload)})")
            post_lets, post_fresh = self.statement_effects(entity, role.message.post)
            lets += post_lets
            fresh += post_fresh

        if is_last_for_entity:
            for fin in self.model.protocol.finalise:
                if fin.entity == entity:
                    fin_lets, fin_fresh = self.statement_effects(entity, fin.statements)
                    lets += fin_lets
                    fresh += fin_fresh

        premises.extend(fresh)
        self.role_counter[entity] = previous_index + 1
        conclusions = [
            f"St_{fact_name(entity)}_{previous_index + 1}({', '.join(self.state[entity])})"
        ]
        if role.kind == "send":
            conclusions.append(io_fact)

        lines = [f"rule {role.label}:"]
        if lets:
            lines.append("    let")
            for binding in lets:
                lines.append(f"      {binding}")
            lines.append("    in")
        lines.append(f"    [ {', '.join(premises)} ]" if premises else "    [ ]")
        lines.append(f"  --[ {role.label}() ]->")
        lines.append(f"    [ {', '.join(conclusions)} ]")
        return "\n".join(lines)


def emit_executability_lemma(model: Model) -> str:
    """Exists-trace lemma requiring every rule label in protocol order."""
    roles = protocol_roles(model)
    timepoints = [f"#t{i}" for i in range(1, len(roles) + 1)]
    occurrences = " & ".join(
        f"{role.label}() @ {t}" for role, t in zip(roles, timepoints)
    )
    ordering = " & ".join(f"{a} < {b}" for a, b in zip(timepoints, timepoints[1:]))
    formula = occurrences if not ordering else f"{occurrences}\n     & {ordering}"
    return (
        "lemma executability:\n"
        "  exists-trace\n"
        f'  "Ex {" ".join(timepoints)}.\n'
        f'     {formula}"'
    )


def export(model: Model) -> TheoryText:
    """Complete theory; deterministic bytes. Requires a clean model."""
    diagnostics = check_semantics(model)
    if diagnostics:
        raise ExportError(diagnostics)

    builder = _TheoryBuilder(model)
    roles = protocol_roles(model)
    last_role_index: dict[str, int] = {}
    for idx, role in enumerate(roles):
        last_role_index[role.entity] = idx

    rule_texts = [
        builder.emit_rule(role, is_last_for_entity=(last_role_index[role.entity] == idx))
        for idx, role in enumerate(roles)
    ]

    header = f"theory {sanitize(model.ident)}\nbegin\n"
    builtins = builder.signature_block()
    rules = "\n" + "\n\n".join(rule_texts) + "\n"
    lemma = "\n" + emit_executability_lemma(model) + "\n\nend\n"
    return TheoryText(header=header, builtins=builtins, rules=rules, lemma=lemma)


def _tuple(rendered: list[str]) -> str:
    return rendered[0] if len(rendered) == 1 else "<" + ", ".join(rendered) + ">"


def _atom(rendered: str) -> str:
    if set(rendered) <= _ATOM_CHARS:
        return rendered
    return f"({rendered})"
