from __future__ import annotations

import dataclasses
import re

import pytest

from conftest import GOLDEN_DIR
from metacp.diagnostics import ExportError
from metacp.model import Application, Entity, SetRef, VarRef
from metacp.proverif import (
    TYPED,
    UNTYPED,
    emit_correctness,
    emit_entity_process,
    emit_main,
    emit_preamble,
    emit_statement,
    emit_term,
    export,
    plan_correctness,
    sanitize,
)

from modelgen import generate_model

# ---------------------------------------------------------------------------
# independent reading of emitted processes

_ACTION_RES = (
    (re.compile(r"new (\w+): (\w+);$"), lambda m: ("new", m.group(1))),
    (re.compile(r"let (\w+) = .* in$"), lambda m: ("let", m.group(1))),
    (re.compile(r"out\((\w+), \((.*)\)\);$"), lambda m: ("out", m.group(1), tuple(m.group(2).split(", ")))),
    (re.compile(r"out\((\w+), (\w+)\);$"), lambda m: ("out", m.group(1), (m.group(2),))),
    (re.compile(r"in\((\w+), \((.*)\)\);$"), lambda m: ("in", m.group(1), tuple(p.split(": ")[0] for p in m.group(2).split(", ")))),
    (re.compile(r"in\((\w+), (\w+): \w+\);$"), lambda m: ("in", m.group(1), (m.group(2),))),
    (re.compile(r"insert .*;$"), lambda m: ("insert",)),
    (re.compile(r"0\.$"), lambda m: ("end",)),
)


def parse_processes(processes_text: str) -> dict[str, list[tuple]]:
    """Entity process bodies read back as abstract action sequences."""
    blocks: dict[str, list[tuple]] = {}
    current = None
    for raw in processes_text.splitlines():
        line = raw.strip()
        if not line:
            continue
        started = re.match(r"let proc_(\w+) =(.*)$", line)
        if started:
            current = started.group(1)
            blocks[current] = []
            line = started.group(2).strip()
            if not line:
                continue
        assert current is not None, f"statement outside a process: {line}"
        for pattern, build in _ACTION_RES:
            matched = pattern.match(line)
            if matched:
                blocks[current].append(build(matched))
                break
        else:
            raise AssertionError(f"unparseable process line: {line!r}")
    return blocks


def expected_actions(model, entity: str) -> list[tuple]:
    """Statement order demanded by the sender/receiver message rules,
    derived here independently of the emitter."""
    plan = plan_correctness(model)
    consumed = plan.consumed.get(entity) if plan else None
    actions: list[tuple] = []

    def statement(a) -> tuple:
        if a.is_probabilistic:
            return ("new", sanitize(a.target))
        return ("let", sanitize(a.target))

    def chan(message) -> str:
        ch = message.channel
        if ch is None or ch.ident is None or ch.modifier == "insecure":
            return "c"
        return f"ch_{ch.ident}"

    for message in model.protocol.messages:
        if message.sender == entity:
            actions += [statement(a) for a in message.pre]
            actions.append(("out", chan(message), tuple(sanitize(v.ident) for v in message.send_payload)))
        if message.receiver == entity:
            actions.append(("in", chan(message), tuple(sanitize(v.ident) for v in message.recv_payload)))
            actions += [statement(a) for a in message.post]
    for fin in model.protocol.finalise:
        if fin.entity == entity:
            actions += [statement(a) for a in fin.statements if a.target != consumed]
    if plan and entity in plan.inserts:
        actions.append(("insert",))
    actions.append(("end",))
    return actions


def assert_rule_fidelity(model) -> None:
    """(a) probabilistic <-> new and (b) deterministic <-> let bijections,
    (c) statement order per the sender/receiver rules."""
    blocks = parse_processes(export(model).processes)
    for entity in model.protocol.entities:
        assert blocks[sanitize(entity.ident)] == expected_actions(model, entity.ident)


# ---------------------------------------------------------------------------
# emit_term / emit_statement


def test_emit_term_typed_variable(dhke):
    assert emit_term(dhke, VarRef("x"), TYPED) == "x: N"


def test_emit_term_application_untyped(dhke):
    term = Application("exp", (VarRef("gy"), VarRef("x")))
    assert emit_term(dhke, term, UNTYPED) == "exp(gy, x)"


def test_emit_term_leaf(dhke):
    assert emit_term(dhke, VarRef("g"), UNTYPED) == "g"


def test_emit_term_sanitizes_reserved():
    from metacp.model import Model, Protocol, SetDecl, VarDecl

    model = Model(
        ident="m",
        sets=(SetDecl("type"),),
        variables=(VarDecl(VarRef("new"), "type"),),
        protocol=Protocol(entities=(Entity("A"), Entity("B"))),
    )
    assert emit_term(model, VarRef("new"), TYPED) == "new_v: type_v"


def test_emit_statement_probabilistic(dhke):
    from metacp.model import Assignment

    statement = Assignment("x", "probabilistic", SetRef("N"))
    assert emit_statement(dhke, statement) == "new x: N;"


def test_emit_statement_deterministic(dhke):
    from metacp.model import Assignment

    statement = Assignment("gx", "deterministic", Application("exp", (VarRef("g"), VarRef("x"))))
    assert emit_statement(dhke, statement) == "let gx = exp(g, x) in"


def test_emit_statement_send_on_generic_channel(dhke):
    assert emit_statement(dhke, "send", dhke.protocol.messages[0]) == "out(c, gx);"


def test_emit_statement_receive_typed(dhke):
    assert emit_statement(dhke, "receive", dhke.protocol.messages[1]) == "in(c, gy: Zp);"


# ---------------------------------------------------------------------------
# processes


def test_alice_process_order(dhke):
    plan = plan_correctness(dhke)
    text = emit_entity_process(dhke, dhke.protocol.entities[0], plan)
    lines = [line.strip() for line in text.splitlines()]
    assert lines == [
        "let proc_Alice =",
        "new x: N;",
        "let gx = exp(g, x) in",
        "out(c, gx);",
        "in(c, gy: Zp);",
        "insert finalA(exp(gy, x));",
        "0.",
    ]


def test_bob_process_symmetric(dhke):
    plan = plan_correctness(dhke)
    text = emit_entity_process(dhke, dhke.protocol.entities[1], plan)
    assert "insert finalB(exp(gx, y));" in text
    lines = [line.strip() for line in text.splitlines()]
    assert lines.index("in(c, gx: Zp);") < lines.index("new y: N;")


def test_idle_entity_process(dhke):
    model = dataclasses.replace(
        dhke,
        protocol=dataclasses.replace(
            dhke.protocol, entities=dhke.protocol.entities + (Entity("Eve"),)
        ),
    )
    assert emit_entity_process(model, Entity("Eve"), None) == "let proc_Eve = 0."


# ---------------------------------------------------------------------------
# preamble, correctness, main


def test_preamble_types_and_channel(dhke):
    preamble = emit_preamble(dhke)
    assert "type Zp.\ntype N.\ntype boolean." in preamble
    assert "free c: channel." in preamble


def test_preamble_const_generator(dhke):
    preamble = emit_preamble(dhke)
    assert "const g: Zp." in preamble
    assert "const p: N." in preamble
    # entity-scoped variables never become constants
    assert "const x" not in preamble


def test_preamble_equation(dhke):
    assert (
        "equation forall x: N, y: N; exp(exp(g, x), y) = exp(exp(g, y), x)."
        in emit_preamble(dhke)
    )


def test_preamble_function_signatures(dhke):
    preamble = emit_preamble(dhke)
    assert "fun exp(Zp, N): Zp." in preamble
    assert "fun eq(Zp, Zp): boolean." in preamble


def test_correctness_artifacts(dhke):
    fragment = emit_correctness(dhke)
    assert "table finalA(Zp)." in fragment
    assert "table finalB(Zp)." in fragment
    assert "event correctness(Zp, Zp)." in fragment
    assert "query k: Zp; event(correctness(k, k)) ==> true = true." in fragment
    assert (
        "let agreement = get finalA(kA) in get finalB(kB) in event correctness(kA, kB)."
        in fragment
    )


def test_correctness_absent(dhke):
    model = dataclasses.replace(
        dhke, protocol=dataclasses.replace(dhke.protocol, properties=())
    )
    assert emit_correctness(model) == ""


def test_correctness_unsupported_relation(dhke):
    broken = dataclasses.replace(
        dhke,
        protocol=dataclasses.replace(
            dhke.protocol,
            properties=(
                dhke.protocol.properties[0].__class__(
                    Application("eq", (VarRef("kA"), VarRef("kB"), VarRef("kA")))
                ),
            ),
        ),
    )
    with pytest.raises(ExportError) as failure:
        emit_correctness(broken)
    assert failure.value.diagnostics[0].code == "unsupported-relation"


def test_private_channel_for_auth_modifier(dhke):
    from metacp.model import Channel

    msg = dhke.protocol.messages[0]
    patched = dataclasses.replace(msg, channel=Channel("back", "auth"))
    model = dataclasses.replace(
        dhke,
        protocol=dataclasses.replace(dhke.protocol, messages=(patched, dhke.protocol.messages[1])),
    )
    script = export(model).text
    assert "free ch_back: channel [private]." in script
    assert "out(ch_back, gx);" in script
    assert "in(ch_back, gx: Zp);" in script
    # the generic channel stays declared for the second message
    assert "free c: channel." in script


def test_named_insecure_channel_is_public(dhke):
    from metacp.model import Channel

    msg = dhke.protocol.messages[0]
    patched = dataclasses.replace(msg, channel=Channel("open", "insecure"))
    model = dataclasses.replace(
        dhke,
        protocol=dataclasses.replace(dhke.protocol, messages=(patched, dhke.protocol.messages[1])),
    )
    script = export(model).text
    assert "out(c, gx);" in script
    assert "[private]" not in script


def test_main_with_agreement(dhke):
    assert emit_main(dhke) == "process (!proc_Alice) | (!proc_Bob) | agreement"


def test_main_without_agreement(dhke):
    model = dataclasses.replace(
        dhke, protocol=dataclasses.replace(dhke.protocol, properties=())
    )
    assert emit_main(model) == "process (!proc_Alice) | (!proc_Bob)"


def test_main_three_entities(dhke):
    model = dataclasses.replace(
        dhke,
        protocol=dataclasses.replace(
            dhke.protocol, entities=dhke.protocol.entities + (Entity("Eve"),)
        ),
    )
    assert (
        emit_main(model)
        == "process (!proc_Alice) | (!proc_Bob) | (!proc_Eve) | agreement"
    )


# ---------------------------------------------------------------------------
# whole-script export


def test_export_deterministic(dhke):
    assert export(dhke).text == export(dhke).text


def test_export_sections_concatenate(dhke):
    script = export(dhke)
    assert script.preamble + script.processes + script.correctness + script.main == script.text


def test_export_golden(dhke):
    assert export(dhke).text.encode() == (GOLDEN_DIR / "dhke.pv").read_bytes()


def test_export_rejects_invalid(dhke):
    broken = dataclasses.replace(dhke, variables=dhke.variables[1:])
    with pytest.raises(ExportError):
        export(broken)


def test_rule_fidelity_on_samples(all_samples):
    for model in all_samples.values():
        assert_rule_fidelity(model)


def test_rule_fidelity_on_generated_models():
    for seed in range(60):
        assert_rule_fidelity(generate_model(seed))


# ---------------------------------------------------------------------------
# no free identifiers

_KEYWORDS = {
    "type", "free", "channel", "const", "fun", "equation", "forall", "table",
    "event", "query", "let", "new", "in", "out", "insert", "get", "process",
    "true",
}


def declared_names(model) -> set[str]:
    names = {"c", "agreement", "correctness", "k"}
    names |= {sanitize(s.ident) for s in model.sets}
    names |= {sanitize(v.ident) for v in model.variables if v.is_global_const}
    names |= {sanitize(f.ident) for f in model.functions}
    names |= {f"proc_{sanitize(e.ident)}" for e in model.protocol.entities}
    plan = plan_correctness(model)
    if plan:
        names |= {table for table, _ in plan.tables}
    for m in model.protocol.messages:
        ch = m.channel
        if ch is not None and ch.ident is not None and ch.modifier != "insecure":
            names.add(f"ch_{sanitize(ch.ident)}")
    return names


def bound_names(model) -> set[str]:
    bound = set()
    for eq in model.equations:
        bound |= {sanitize(v.ident) for v in eq.quantified}
    for m in model.protocol.messages:
        bound |= {sanitize(a.target) for a in m.pre + m.post}
        bound |= {sanitize(v.ident) for v in m.recv_payload}
    for fin in model.protocol.finalise:
        bound |= {sanitize(a.target) for a in fin.statements}
    plan = plan_correctness(model)
    if plan:
        bound |= set(plan.consumed.values())
    return bound


def assert_no_free_identifiers(model) -> None:
    text = re.sub(r"\(\*.*?\*\)", "", export(model).text)
    allowed = declared_names(model) | bound_names(model) | _KEYWORDS
    for token in set(re.findall(r"[A-Za-z_][A-Za-z0-9_]*", text)):
        assert token in allowed, f"free identifier {token!r}"


def test_no_free_identifiers_on_samples(all_samples):
    for model in all_samples.values():
        assert_no_free_identifiers(model)


def test_no_free_identifiers_on_generated_models():
    for seed in range(40):
        assert_no_free_identifiers(generate_model(seed))
