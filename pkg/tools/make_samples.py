"""Regenerates the bundled sample models in canonical serialization.

Run from the repository root:  python3 tools/make_samples.py
"""

from __future__ import annotations

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from metacp.model import (
    Application,
    Assignment,
    CorrectnessProperty,
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
    VarDecl,
    VarRef,
)
from metacp.validator import check_semantics
from metacp.xml_io import parse, serialize

OUT = Path(__file__).resolve().parent.parent / "src" / "metacp" / "samples"


def var(ident: str) -> VarRef:
    return VarRef(ident)


def app(function: str, *args) -> Application:
    return Application(function, tuple(var(a) if isinstance(a, str) else a for a in args))


def know(owner: str, *idents: str) -> Knowledge:
    return Knowledge(owner, tuple(var(i) for i in idents))


def det(target: str, source) -> Assignment:
    return Assignment(target, "deterministic", source)


def prob(target: str, set_id: str) -> Assignment:
    return Assignment(target, "probabilistic", SetRef(set_id))


def dhke() -> Model:
    return Model(
        ident="dhke",
        security=512,
        sets=(
            SetDecl("Zp", hint="integers modulo p"),
            SetDecl("N", hint="natural numbers"),
            SetDecl("boolean", hint="truth values"),
        ),
        functions=(
            FuncDecl("exp", 2, ("Zp", "N"), "Zp", hint="group exponentiation"),
            FuncDecl("eq", 2, ("Zp", "Zp"), "boolean", hint="equality"),
        ),
        variables=(
            VarDecl(VarRef("g", "const"), "Zp", hint="group generator"),
            VarDecl(VarRef("p", "const"), "N", hint="group modulus"),
            VarDecl(VarRef("x", "nonce"), "N", scope="Alice"),
            VarDecl(VarRef("gx"), "Zp", scope="Alice"),
            VarDecl(VarRef("y", "nonce"), "N", scope="Bob"),
            VarDecl(VarRef("gy"), "Zp", scope="Bob"),
            VarDecl(VarRef("kA"), "Zp", scope="Alice"),
            VarDecl(VarRef("kB"), "Zp", scope="Bob"),
        ),
        equations=(
            Equation(
                "exp_commutes",
                (var("x"), var("y")),
                app("exp", app("exp", "g", "x"), "y"),
                app("exp", app("exp", "g", "y"), "x"),
            ),
        ),
        protocol=Protocol(
            entities=(
                Entity("Alice", know("Alice", "g")),
                Entity("Bob", know("Bob", "g")),
            ),
            messages=(
                Message(
                    sender="Alice",
                    receiver="Bob",
                    knowledge=(know("Alice", "g"), know("Bob", "g")),
                    pre=(prob("x", "N"), det("gx", app("exp", "g", "x"))),
                    send_payload=(var("gx"),),
                    recv_payload=(var("gx"),),
                ),
                Message(
                    sender="Bob",
                    receiver="Alice",
                    knowledge=(know("Alice", "g", "x", "gx"), know("Bob", "g", "gx")),
                    pre=(prob("y", "N"), det("gy", app("exp", "g", "y"))),
                    send_payload=(var("gy"),),
                    recv_payload=(var("gy"),),
                ),
            ),
            finalise=(
                Finalise("Alice", statements=(det("kA", app("exp", "gy", "x")),)),
                Finalise("Bob", statements=(det("kB", app("exp", "gx", "y")),)),
            ),
            properties=(CorrectnessProperty(app("eq", "kA", "kB")),),
        ),
    )


def _ns_common(ident: str, with_responder_identity: bool) -> Model:
    alice_initial = ("a", "b", "ska", "pka", "pkb")
    bob_initial = ("a", "b", "skb", "pkb", "pka")
    alice_msg3 = ("a", "b", "ska", "pka", "pkb", "na", "m1", "w2", "d2", "naA", "nbA")
    extra_alice_vars = (
        (VarDecl(VarRef("r2"), "bits", scope="Alice"), VarDecl(VarRef("idB"), "bits", scope="Alice"))
        if with_responder_identity
        else ()
    )
    if with_responder_identity:
        message2_body = app("pair", "naB", app("pair", "nb", "b"))
        alice_post2 = (
            det("d2", app("adec", "w2", "ska")),
            det("naA", app("fst", "d2")),
            det("r2", app("snd", "d2")),
            det("nbA", app("fst", "r2")),
            det("idB", app("snd", "r2")),
        )
        alice_msg3 = alice_msg3 + ("r2", "idB")
    else:
        message2_body = app("pair", "naB", "nb")
        alice_post2 = (
            det("d2", app("adec", "w2", "ska")),
            det("naA", app("fst", "d2")),
            det("nbA", app("snd", "d2")),
        )
    return Model(
        ident=ident,
        security=512,
        sets=(
            SetDecl("bits", hint="bitstring"),
            SetDecl("boolean", hint="truth values"),
        ),
        functions=(
            FuncDecl("aenc", 2, ("bits", "bits"), "bits", hint="asymmetric encryption"),
            FuncDecl("adec", 2, ("bits", "bits"), "bits", hint="asymmetric decryption"),
            FuncDecl("pair", 2, ("bits", "bits"), "bits", hint="pairing"),
            FuncDecl("fst", 1, ("bits",), "bits", hint="first projection"),
            FuncDecl("snd", 1, ("bits",), "bits", hint="second projection"),
            FuncDecl("eq", 2, ("bits", "bits"), "boolean", hint="equality"),
        ),
        variables=(
            VarDecl(VarRef("a", "const"), "bits", hint="agent identity"),
            VarDecl(VarRef("b", "const"), "bits", hint="agent identity"),
            VarDecl(VarRef("ska", "const"), "bits", hint="private asymmetric key"),
            VarDecl(VarRef("skb", "const"), "bits", hint="private asymmetric key"),
            VarDecl(VarRef("pka", "const"), "bits", hint="public asymmetric key"),
            VarDecl(VarRef("pkb", "const"), "bits", hint="public asymmetric key"),
            VarDecl(VarRef("m", "var"), "bits", hint="equation variable"),
            VarDecl(VarRef("n", "var"), "bits", hint="equation variable"),
            VarDecl(VarRef("na", "nonce"), "bits", scope="Alice"),
            VarDecl(VarRef("nb", "nonce"), "bits", scope="Bob"),
            VarDecl(VarRef("m1"), "bits", scope="Alice"),
            VarDecl(VarRef("m2"), "bits", scope="Bob"),
            VarDecl(VarRef("m3"), "bits", scope="Alice"),
            VarDecl(VarRef("w1"), "bits", scope="Bob"),
            VarDecl(VarRef("w2"), "bits", scope="Alice"),
            VarDecl(VarRef("w3"), "bits", scope="Bob"),
            VarDecl(VarRef("d1"), "bits", scope="Bob"),
            VarDecl(VarRef("d2"), "bits", scope="Alice"),
            VarDecl(VarRef("naB"), "bits", scope="Bob"),
            VarDecl(VarRef("idA"), "bits", scope="Bob"),
            VarDecl(VarRef("naA"), "bits", scope="Alice"),
            VarDecl(VarRef("nbA"), "bits", scope="Alice"),
        )
        + extra_alice_vars
        + (
            VarDecl(VarRef("nbB"), "bits", scope="Bob"),
            VarDecl(VarRef("fA"), "bits", scope="Alice"),
            VarDecl(VarRef("fB"), "bits", scope="Bob"),
        ),
        equations=(
            Equation(
                "adec_a",
                (var("m"),),
                app("adec", app("aenc", "m", "pka"), "ska"),
                var("m"),
            ),
            Equation(
                "adec_b",
                (var("m"),),
                app("adec", app("aenc", "m", "pkb"), "skb"),
                var("m"),
            ),
            Equation(
                "fst_pair",
                (var("m"), var("n")),
                app("fst", app("pair", "m", "n")),
                var("m"),
            ),
            Equation(
                "snd_pair",
                (var("m"), var("n")),
                app("snd", app("pair", "m", "n")),
                var("n"),
            ),
        ),
        protocol=Protocol(
            entities=(
                Entity("Alice", know("Alice", *alice_initial)),
                Entity("Bob", know("Bob", *bob_initial)),
            ),
            messages=(
                Message(
                    sender="Alice",
                    receiver="Bob",
                    knowledge=(know("Alice", *alice_initial), know("Bob", *bob_initial)),
                    pre=(
                        prob("na", "bits"),
                        det("m1", app("aenc", app("pair", "na", "a"), "pkb")),
                    ),
                    send_payload=(var("m1"),),
                    recv_payload=(var("w1"),),
                    post=(
                        det("d1", app("adec", "w1", "skb")),
                        det("naB", app("fst", "d1")),
                        det("idA", app("snd", "d1")),
                    ),
                ),
                Message(
                    sender="Bob",
                    receiver="Alice",
                    knowledge=(
                        know("Alice", *(alice_initial + ("na", "m1"))),
                        know("Bob", *(bob_initial + ("w1", "d1", "naB", "idA"))),
                    ),
                    pre=(prob("nb", "bits"), det("m2", app("aenc", message2_body, "pka"))),
                    send_payload=(var("m2"),),
                    recv_payload=(var("w2"),),
                    post=alice_post2,
                ),
                Message(
                    sender="Alice",
                    receiver="Bob",
                    knowledge=(
                        know("Alice", *alice_msg3),
                        know("Bob", *(bob_initial + ("w1", "d1", "naB", "idA", "nb", "m2"))),
                    ),
                    pre=(det("m3", app("aenc", "nbA", "pkb")),),
                    send_payload=(var("m3"),),
                    recv_payload=(var("w3"),),
                    post=(det("nbB", app("adec", "w3", "skb")),),
                ),
            ),
            finalise=(
                Finalise("Alice", statements=(det("fA", var("nbA")),)),
                Finalise("Bob", statements=(det("fB", var("nbB")),)),
            ),
            properties=(CorrectnessProperty(app("eq", "fA", "fB")),),
        ),
    )


def needham_schroeder() -> Model:
    return _ns_common("needham_schroeder", with_responder_identity=False)


def needham_schroeder_lowe() -> Model:
    return _ns_common("needham_schroeder_lowe", with_responder_identity=True)


def main() -> None:
    jobs = {
        "dhke": dhke(),
        "needham-schroeder": needham_schroeder(),
        "needham-schroeder-lowe": needham_schroeder_lowe(),
    }
    for name, model in jobs.items():
        diagnostics = check_semantics(model)
        if diagnostics:
            for d in diagnostics:
                print(f"{name}: {d.render()}")
            raise SystemExit(f"{name} does not validate")
        doc = serialize(model)
        if parse(doc) != model:
            raise SystemExit(f"{name} does not round-trip")
        (OUT / f"{name}.psv").write_bytes(doc.data)
        print(f"wrote {name}.psv ({len(doc.data)} bytes)")


if __name__ == "__main__":
    main()
