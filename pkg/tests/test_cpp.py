from __future__ import annotations

import dataclasses

import pytest

from metacp.diagnostics import Diagnostic, ExportError
from metacp.groups import GroupSpec
from metacp.model import Entity, FuncDecl, VarDecl, VarRef
from metacp.cpp import detect_group, export


def test_detect_group_dhke(dhke):
    group = detect_group(dhke)
    assert isinstance(group, GroupSpec)
    assert group.generator_id == "g"
    assert group.modulus_id == "p"
    assert group.exp_function.ident == "exp"
    assert group.security == 512
    assert (group.modular_set, group.naturals_set) == ("Zp", "N")


def test_detect_group_needs_exp_signature(dhke):
    wrong = FuncDecl("exp", 2, ("Zp", "Zp"), "Zp", hint="group exponentiation")
    model = dataclasses.replace(dhke, functions=(wrong,) + dhke.functions[1:])
    found = detect_group(model)
    assert isinstance(found, Diagnostic)
    assert found.code == "no-group-structure"


def test_detect_group_ambiguous_generators(dhke):
    unhinted = dataclasses.replace(dhke.variables[0], hint=None)
    second = VarDecl(VarRef("g2", "const"), "Zp")
    model = dataclasses.replace(dhke, variables=(unhinted, second) + dhke.variables[1:])
    found = detect_group(model)
    assert isinstance(found, Diagnostic)
    assert found.code == "ambiguous-group"


def test_detect_group_hint_breaks_tie(dhke):
    # a second, unhinted constant is tolerated because g carries the hint
    second = VarDecl(VarRef("g2", "const"), "Zp")
    model = dataclasses.replace(dhke, variables=dhke.variables + (second,))
    group = detect_group(model)
    assert isinstance(group, GroupSpec)
    assert group.generator_id == "g"


def test_detect_group_ignores_entity_scoped_constants(dhke):
    scoped = VarDecl(VarRef("g2", "const"), "Zp", scope="Alice")
    model = dataclasses.replace(dhke, variables=dhke.variables + (scoped,))
    group = detect_group(model)
    assert isinstance(group, GroupSpec)
    assert group.generator_id == "g"


def test_export_single_modexp_helper(dhke):
    text = export(dhke)
    assert text.count("a_exp_b_mod_c") == 1
    assert "a_exp_b_mod_c(base, e, p)" in text  # references the global modulus


def test_export_argument_protocol(dhke):
    text = export(dhke)
    assert "Usage: ./dhke <g> <p> <Alice|Bob> [host]" in text
    assert 'argc > 4 ? argv[4] : "localhost"' in text
    assert "int port = 4433;" in text
    assert 'std::getenv("METACP_PORT")' in text


def test_export_roles(dhke):
    text = export(dhke)
    # the receiver of message 1 listens, the sender connects
    assert "// Bob listens for the first message; Alice connects." in text
    bob_branch = text.split('entity == "Bob"')[1].split("}")[0]
    assert "Channel channel(port);" in bob_branch
    alice_branch = text.split('entity == "Alice"')[1].split("}")[0]
    assert "Channel channel(host, port);" in alice_branch


def test_export_statement_translation(dhke):
    text = export(dhke)
    assert 'Integer x = sample_or_override("x", sample_naturals);' in text
    assert "Integer gx = exp_fn(g, x);" in text
    assert "send_integer(channel, gx);" in text
    assert "Integer gy = recv_integer(channel);" in text
    assert 'std::cout << "kA = " << kA << std::endl;' in text


def test_export_rejects_three_parties(dhke):
    model = dataclasses.replace(
        dhke,
        protocol=dataclasses.replace(
            dhke.protocol, entities=dhke.protocol.entities + (Entity("Eve"),)
        ),
    )
    with pytest.raises(ExportError) as failure:
        export(model)
    assert failure.value.diagnostics[0].code == "not-two-party"


def test_export_rejects_missing_group(ns):
    with pytest.raises(ExportError) as failure:
        export(ns)
    assert failure.value.diagnostics[0].code == "no-group-structure"


def test_export_deterministic(dhke):
    assert export(dhke) == export(dhke)
