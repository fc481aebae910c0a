from __future__ import annotations

import dataclasses
import re

import pytest

from conftest import GOLDEN_DIR
from metacp.diagnostics import ExportError
from metacp.tamarin import emit_executability_lemma, export, protocol_roles

from modelgen import generate_model


def rules_of(theory_text: str) -> list[str]:
    chunks = re.split(r"\nrule ", theory_text)
    return ["rule " + c for c in chunks[1:]]


def test_dhke_rule_count(dhke):
    theory = export(dhke)
    # one rule per (entity, message-role): 2 sends + 2 receives
    assert len(rules_of(theory.text)) == 4
    assert len(protocol_roles(dhke)) == 4


def test_dhke_fresh_fact_for_nonce(dhke):
    text = export(dhke).text
    assert "Fr(~x)" in text
    assert "Fr(~y)" in text


def test_dhke_uses_dh_builtin(dhke):
    text = export(dhke).text
    assert "builtins: diffie-hellman" in text
    assert "'g'^~x" in text
    assert "equations:" not in text  # commutativity replaced by the builtin


def test_dhke_lemma_orders_all_labels(dhke):
    lemma = emit_executability_lemma(dhke)
    labels = ["Alice_1_send", "Bob_1_recv", "Bob_2_send", "Alice_2_recv"]
    positions = [lemma.index(f"{label}() @ #t{i + 1}") for i, label in enumerate(labels)]
    assert positions == sorted(positions)
    assert "#t1 < #t2" in lemma and "#t3 < #t4" in lemma
    assert lemma.startswith("lemma executability:\n  exists-trace")


def test_single_message_lemma():
    model = generate_model(0)
    single = dataclasses.replace(
        model,
        protocol=dataclasses.replace(
            model.protocol, messages=model.protocol.messages[:1], finalise=()
        ),
    )
    lemma = emit_executability_lemma(single)
    assert lemma.count("@ #t") == 2


def test_empty_message_protocol_rejected(dhke):
    broken = dataclasses.replace(
        dhke, protocol=dataclasses.replace(dhke.protocol, messages=(), finalise=())
    )
    with pytest.raises(ExportError):
        export(broken)


def test_ns_emits_functions_and_equations(ns):
    text = export(ns).text
    assert "builtins" not in text
    assert "functions: aenc/2, adec/2, pair/2, fst/1, snd/1, eq/2" in text
    assert "adec(aenc(m, 'pka'), 'ska') = m" in text
    assert "fst(pair(m, n)) = m" in text


def test_export_deterministic(dhke):
    assert export(dhke).text == export(dhke).text


def test_sections_concatenate(dhke):
    theory = export(dhke)
    assert theory.header + theory.builtins + theory.rules + theory.lemma == theory.text


def test_export_golden(dhke):
    assert export(dhke).text.encode() == (GOLDEN_DIR / "dhke.spthy").read_bytes()


def test_theory_name_from_model_id(ns):
    assert export(ns).text.startswith("theory needham_schroeder\nbegin")


# ---------------------------------------------------------------------------
# structural wellformedness of rules


def _vars_in(fragment: str) -> set[str]:
    cleaned = re.sub(r"'[^']*'", "", fragment)  # public names are not variables
    cleaned = re.sub(r"\b[A-Z]\w*", "", cleaned)  # fact names are not variables
    return set(re.findall(r"~?\b[a-z]\w*", cleaned))


def assert_rules_wellformed(theory_text: str) -> None:
    """Every variable on a rule's right side appears on its left side or in
    a let binding (what the external tool checks as wellformedness)."""
    for rule in rules_of(theory_text):
        lets = re.findall(r"^\s+(\w+) = ", rule, re.M)
        premises = re.search(r"\[(.*?)\]\s*--\[", rule, re.S).group(1)
        conclusion = re.search(r"\]->\s*\[(.*)\]", rule, re.S).group(1)
        known = _vars_in(premises) | set(lets) | {"~" + binding for binding in lets}
        unknown = {v for v in _vars_in(conclusion) if v not in known and v.lstrip("~") not in known}
        assert not unknown, f"unbound in conclusion: {unknown}\n{rule}"


def test_rules_wellformed_on_samples(all_samples):
    for model in all_samples.values():
        assert_rules_wellformed(export(model).text)


def test_rules_wellformed_on_generated_models():
    for seed in range(60):
        model = generate_model(seed)
        theory = export(model)
        assert_rules_wellformed(theory.text)
        roles = protocol_roles(model)
        assert len(rules_of(theory.text)) == len(roles)


def test_one_label_per_rule_on_generated_models():
    for seed in range(30):
        text = export(generate_model(seed)).text
        labels = re.findall(r"--\[ (\w+)\(\) \]->", text)
        assert len(labels) == len(set(labels))
        for label in labels:
            assert f"{label}() @" in text  # every label appears in the lemma
