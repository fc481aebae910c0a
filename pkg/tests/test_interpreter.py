from __future__ import annotations

import dataclasses

import pytest

from conftest import P512
from metacp.interpreter import InterpreterError, TermValue, interpret_concrete, values_equal
from metacp.model import Application, Assignment, FuncDecl, VarRef


def test_dhke_small_modulus(dhke):
    env = interpret_concrete(dhke, seed=7, constants={"g": 3, "p": 2**5 - 1})
    # brute-force check of the algebraic identity with the drawn nonces
    x, y = env["Alice"]["x"], env["Bob"]["y"]
    assert env["Alice"]["kA"] == pow(pow(3, x, 31), y, 31)
    assert env["Bob"]["kB"] == pow(pow(3, y, 31), x, 31)
    assert env["Alice"]["kA"] == env["Bob"]["kB"]


def test_dhke_paper_modulus(dhke):
    env = interpret_concrete(dhke, seed=1, constants={"g": 3, "p": P512})
    assert env["Alice"]["kA"] == env["Bob"]["kB"]
    assert 0 < env["Alice"]["kA"] < P512


def test_deterministic_per_seed(dhke):
    first = interpret_concrete(dhke, seed=99)
    second = interpret_concrete(dhke, seed=99)
    assert first == second
    third = interpret_concrete(dhke, seed=100)
    assert third != first


def test_payloads_copied_positionally(dhke):
    env = interpret_concrete(dhke, seed=5, constants={"g": 3, "p": 2**13 - 1})
    assert env["Bob"]["gx"] == env["Alice"]["gx"]
    assert env["Alice"]["gy"] == env["Bob"]["gy"]


def test_uninterpretable_function(dhke):
    h = FuncDecl("h", 1, ("Zp",), "Zp")
    fin = dhke.protocol.finalise[0]
    hashed = dataclasses.replace(
        fin,
        statements=fin.statements
        + (Assignment("kA", "deterministic", Application("h", (VarRef("gy"),))),),
    )
    model = dataclasses.replace(
        dhke,
        functions=dhke.functions + (h,),
        protocol=dataclasses.replace(
            dhke.protocol, finalise=(hashed, dhke.protocol.finalise[1])
        ),
    )
    with pytest.raises(InterpreterError) as failure:
        interpret_concrete(model, seed=1)
    assert failure.value.diagnostics[0].code == "uninterpretable-function"


def test_rejects_invalid_model(dhke):
    broken = dataclasses.replace(dhke, variables=dhke.variables[1:])  # drop g
    with pytest.raises(InterpreterError):
        interpret_concrete(broken, seed=1)


def test_transforming_channels_are_not_executable(dhke):
    from metacp.model import Channel

    transform = Channel(
        "warp", "insecure", content=(Application("exp", (VarRef("g"), VarRef("x"))),)
    )
    msg = dhke.protocol.messages[0]
    patched = dataclasses.replace(msg, channel=transform)
    model = dataclasses.replace(
        dhke,
        protocol=dataclasses.replace(
            dhke.protocol, messages=(patched, dhke.protocol.messages[1])
        ),
    )
    with pytest.raises(InterpreterError) as failure:
        interpret_concrete(model, seed=1)
    assert failure.value.diagnostics[0].code == "uninterpretable-channel"


def test_ns_equation_rewriting(ns):
    env = interpret_concrete(ns, seed=11)
    # the responder decrypts what the initiator encrypted
    assert env["Bob"]["naB"] == env["Alice"]["na"]
    assert env["Alice"]["nbA"] == env["Bob"]["nb"]
    assert env["Alice"]["fA"] == env["Bob"]["fB"]
    # a stuck decryption would have surfaced as a TermValue
    assert isinstance(env["Bob"]["nbB"], bytes)


def test_nsl_identity_projection(nsl):
    env = interpret_concrete(nsl, seed=11)
    assert env["Alice"]["idB"] == env["Bob"]["b"]
    assert env["Alice"]["fA"] == env["Bob"]["fB"]


def test_values_equal_discriminates():
    assert values_equal(3, 3)
    assert not values_equal(3, b"\x03")
    assert not values_equal(True, 1)
    assert values_equal((1, b"ab"), (1, b"ab"))
    assert values_equal(TermValue("f", (1,)), TermValue("f", (1,)))
    assert not values_equal(TermValue("f", (1,)), TermValue("g", (1,)))
