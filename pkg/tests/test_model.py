from __future__ import annotations

import pytest

from metacp.model import (
    Application,
    VarRef,
    free_variables,
    iter_applications,
    resolve,
)
from metacp.xml_io import parse, serialize


def test_resolve_function(dhke):
    exp = resolve(dhke, "exp", "function")
    assert exp is not None
    assert exp.arity == 2
    assert exp.param_sets == ("Zp", "N")
    assert exp.result_set == "Zp"


def test_resolve_variable(dhke):
    g = resolve(dhke, "g", "variable")
    assert g is not None
    assert g.set_id == "Zp"
    assert g.modifier == "const"
    assert g.is_global_const


def test_resolve_not_found(dhke):
    assert resolve(dhke, "nosuch", "set") is None


def test_resolve_entity_and_set(dhke):
    assert resolve(dhke, "Alice", "entity").ident == "Alice"
    assert resolve(dhke, "Zp", "set").hint == "integers modulo p"


def test_resolve_is_partial_function(dhke):
    # at most one declaration per (id, namespace); same id in another
    # namespace resolves independently
    assert resolve(dhke, "exp", "variable") is None
    assert resolve(dhke, "g", "set") is None


def test_resolve_unknown_namespace(dhke):
    with pytest.raises(ValueError):
        resolve(dhke, "g", "sort")


def test_free_variables_nested():
    term = Application(
        "exp",
        (Application("exp", (VarRef("g"), VarRef("x"))), VarRef("y")),
    )
    assert [v.ident for v in free_variables(term)] == ["g", "x", "y"]


def test_free_variables_leaf():
    assert [v.ident for v in free_variables(VarRef("x"))] == ["x"]


def test_free_variables_relation(dhke):
    relation = dhke.protocol.properties[0].relation
    assert [v.ident for v in free_variables(relation)] == ["kA", "kB"]


def test_free_variables_deduplicates():
    term = Application("f1", (VarRef("x"), VarRef("x")))
    assert [v.ident for v in free_variables(term)] == ["x"]


def test_free_variables_stable_under_reserialization(dhke):
    reparsed = parse(serialize(dhke))
    for eq, eq2 in zip(dhke.equations, reparsed.equations):
        assert free_variables(eq.lhs) == free_variables(eq2.lhs)
        assert free_variables(eq.rhs) == free_variables(eq2.rhs)


def test_application_arities_match_declarations(dhke):
    # all application nodes anywhere in the model respect declared arity
    def terms():
        for eq in dhke.equations:
            yield eq.lhs
            yield eq.rhs
        for m in dhke.protocol.messages:
            for a in m.pre + m.post:
                if not isinstance(a.source, VarRef) and hasattr(a.source, "function"):
                    yield a.source
        for fin in dhke.protocol.finalise:
            for a in fin.statements:
                yield a.source
        for prop in dhke.protocol.properties:
            yield prop.relation

    checked = 0
    for term in terms():
        for node in iter_applications(term):
            func = resolve(dhke, node.function, "function")
            assert len(node.args) == func.arity
            checked += 1
    assert checked > 0


def test_equation_free_variables_subset_of_quantified(dhke):
    consts = {v.ident for v in dhke.variables if v.modifier == "const"}
    for eq in dhke.equations:
        quantified = {v.ident for v in eq.quantified}
        for side in (eq.lhs, eq.rhs):
            for v in free_variables(side):
                assert v.ident in quantified | consts
