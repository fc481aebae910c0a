"""Concrete, seeded execution of a validated model.

Runs one honest protocol session: probabilistic assignments draw from a
seeded pseudorandom stream, messages copy values from sender to receiver
positionally, finalise statements run last. The result is the final
per-entity variable bindings, used as a correctness oracle.

Function semantics come from three sources, in order:

  - the detected group structure gives the exponentiation function its
    modular-exponentiation meaning,
  - hints mark equality, pairing and the two projections as built-ins,
  - any other function must occur in a model equation; those equations,
    oriented left to right, rewrite applications of it to normal form
    (encryption/decryption pairs work this way).

A function with none of the three is not interpretable and aborts the run.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .diagnostics import Diagnostic, PsvError, error
from .groups import MODULAR_HINT, NATURALS_HINT, GroupSpec, detect_group
from .model import (
    Application,
    Assignment,
    Model,
    SetRef,
    Term,
    VarRef,
    iter_applications,
    resolve,
)
from .validator import check_semantics

PAIRING_HINT = "pairing"
FIRST_PROJECTION_HINT = "first projection"
SECOND_PROJECTION_HINT = "second projection"
EQUALITY_HINT = "equality"

_MAX_REWRITES = 64


class InterpreterError(PsvError):
    pass


def _fail(code: str, message: str) -> InterpreterError:
    return InterpreterError([error("/model", code, message)])


@dataclass(frozen=True)
class TermValue:
    """A concrete value headed by a function without numeric semantics."""

    function: str
    args: tuple = ()


def values_equal(a, b) -> bool:
    """Numeric for integers, byte-wise for strings, structural otherwise."""
    if isinstance(a, bool) or isinstance(b, bool):
        return isinstance(a, bool) and isinstance(b, bool) and a is b
    if isinstance(a, int) and isinstance(b, int):
        return a == b
    if isinstance(a, bytes) and isinstance(b, bytes):
        return a == b
    if isinstance(a, tuple) and isinstance(b, tuple):
        return len(a) == len(b) and all(values_equal(x, y) for x, y in zip(a, b))
    if isinstance(a, TermValue) and isinstance(b, TermValue):
        return a.function == b.function and values_equal(a.args, b.args)
    return False


class _Interpreter:
    def __init__(self, model: Model, seed: int, constants: dict | None):
        self.model = model
        self.rng = random.Random(seed)
        self.group: GroupSpec | None = None
        detected = detect_group(model)
        if not isinstance(detected, Diagnostic):
            self.group = detected
        self.const_values: dict[str, object] = {}
        self.injected = dict(constants or {})
        self.envs: dict[str, dict[str, object]] = {
            e.ident: {} for e in model.protocol.entities
        }
        self.equation_functions = {
            app.function
            for eq in model.equations
            for side in (eq.lhs, eq.rhs)
            for app in iter_applications(side)
        }

    # -- semantics lookup ---------------------------------------------------

    def builtin_kind(self, ident: str) -> str | None:
        if self.group is not None and ident == self.group.exp_function.ident:
            return "exp"
        decl = resolve(self.model, ident, "function")
        if decl is None:
            return None
        if decl.hint == EQUALITY_HINT or decl.ident == "eq":
            return "eq"
        if decl.hint == PAIRING_HINT:
            return "pair"
        if decl.hint == FIRST_PROJECTION_HINT:
            return "fst"
        if decl.hint == SECOND_PROJECTION_HINT:
            return "snd"
        return None

    def check_interpretable(self) -> None:
        used: set[str] = set()

        def scan(statements) -> None:
            for a in statements:
                if not isinstance(a.source, SetRef):
                    for app in iter_applications(a.source):
                        used.add(app.function)

        for m in self.model.protocol.messages:
            scan(m.pre)
            scan(m.post)
            if m.channel is not None and m.channel.content:
                raise _fail(
                    "uninterpretable-channel",
                    "channel transformations have no execution semantics",
                )
        for fin in self.model.protocol.finalise:
            scan(fin.statements)
        for ident in sorted(used):
            if self.builtin_kind(ident) is None and ident not in self.equation_functions:
                raise _fail(
                    "uninterpretable-function",
                    f"function {ident} has no built-in semantics and occurs in no equation",
                )

    # -- sampling -----------------------------------------------------------

    def modulus_value(self) -> int | None:
        if self.group is None:
            return None
        return self.const_values.get(self.group.modulus_id)

    def sample(self, set_id: str):
        decl = resolve(self.model, set_id, "set")
        hint = decl.hint if decl is not None else None
        bits = self.model.security
        if hint == NATURALS_HINT:
            return self.rng.randrange(2, 1 << bits)
        if hint == MODULAR_HINT:
            p = self.modulus_value()
            if not isinstance(p, int):
                raise _fail(
                    "uninterpretable-sampling",
                    f"sampling from {set_id} needs a concrete group modulus",
                )
            return self.rng.randrange(1, p)
        return self.rng.getrandbits(bits).to_bytes((bits + 7) // 8, "big")

    def bind_constants(self) -> None:
        consts = [v for v in self.model.variables if v.modifier == "const"]
        # the modulus first: modular sampling needs its value
        if self.group is not None:
            mod_id = self.group.modulus_id
            consts.sort(key=lambda v: 0 if v.ident == mod_id else 1)
        for v in consts:
            if v.ident in self.injected:
                self.const_values[v.ident] = self.injected[v.ident]
            else:
                self.const_values[v.ident] = self.sample(v.set_id)

    def initial_bindings(self) -> None:
        shared: dict[str, object] = {}
        for e in self.model.protocol.entities:
            if e.initial_knowledge is None:
                continue
            for ref in e.initial_knowledge.vars:
                ident = ref.ident
                if ident in self.const_values:
                    value = self.const_values[ident]
                elif ident in shared:
                    value = shared[ident]
                else:
                    if ident in self.injected:
                        value = self.injected[ident]
                    else:
                        decl = resolve(self.model, ident, "variable")
                        value = self.sample(decl.set_id)
                    shared[ident] = value
                self.envs[e.ident][ident] = value

    # -- evaluation ---------------------------------------------------------

    def evaluate(self, term: Term, env: dict[str, object]):
        if isinstance(term, VarRef):
            if term.ident in env:
                return env[term.ident]
            raise _fail("unbound-variable", f"{term.ident} has no value at this point")
        args = tuple(self.evaluate(arg, env) for arg in term.args)
        return self.apply(term.function, args)

    def apply(self, function: str, args: tuple):
        kind = self.builtin_kind(function)
        if kind == "exp":
            base, exponent = args
            p = self.modulus_value()
            if not all(isinstance(v, int) for v in (base, exponent, p)):
                raise _fail(
                    "uninterpretable-function",
                    f"{function} needs integer arguments and a concrete modulus",
                )
            return pow(base, exponent, p)
        if kind == "eq":
            return values_equal(args[0], args[1])
        if kind == "pair":
            return tuple(args)
        if kind == "fst":
            if isinstance(args[0], tuple) and args[0]:
                return args[0][0]
            return TermValue(function, args)
        if kind == "snd":
            if isinstance(args[0], tuple) and len(args[0]) > 1:
                return args[0][1]
            return TermValue(function, args)
        return self.rewrite(TermValue(function, args))

    def rewrite(self, value: TermValue):
        current: object = value
        for _ in range(_MAX_REWRITES):
            if not isinstance(current, TermValue):
                return current
            step = self.rewrite_once(current)
            if step is None:
                return current
            current = step
        return current

    def rewrite_once(self, value: TermValue):
        for eq in self.model.equations:
            if eq.lhs.function != value.function:
                continue
            quantified = {v.ident for v in eq.quantified}
            bindings: dict[str, object] = {}
            if self.match(eq.lhs, value, quantified, bindings):
                return self.evaluate_pattern(eq.rhs, quantified, bindings)
        return None

    def match(self, pattern: Term, value, quantified: set[str], bindings: dict) -> bool:
        if isinstance(pattern, VarRef):
            if pattern.ident in quantified:
                if pattern.ident in bindings:
                    return values_equal(bindings[pattern.ident], value)
                bindings[pattern.ident] = value
                return True
            # a constant: match by concrete value
            if pattern.ident not in self.const_values:
                return False
            return values_equal(self.const_values[pattern.ident], value)
        if not isinstance(value, TermValue) or value.function != pattern.function:
            return False
        if len(value.args) != len(pattern.args):
            return False
        return all(
            self.match(p, v, quantified, bindings)
            for p, v in zip(pattern.args, value.args)
        )

    def evaluate_pattern(self, term: Term, quantified: set[str], bindings: dict):
        if isinstance(term, VarRef):
            if term.ident in bindings:
                return bindings[term.ident]
            if term.ident in self.const_values:
                return self.const_values[term.ident]
            raise _fail("unbound-variable", f"equation variable {term.ident} is unbound")
        args = tuple(self.evaluate_pattern(arg, quantified, bindings) for arg in term.args)
        return self.apply(term.function, args)

    # -- execution ----------------------------------------------------------

    def run_assignment(self, entity: str, a: Assignment) -> None:
        env = self.envs[entity]
        if isinstance(a.source, SetRef):
            env[a.target] = self.sample(a.source.ident)
        else:
            env[a.target] = self.evaluate(a.source, env)

    def run(self) -> dict[str, dict[str, object]]:
        self.check_interpretable()
        self.bind_constants()
        self.initial_bindings()
        for m in self.model.protocol.messages:
            for a in m.pre:
                self.run_assignment(m.sender, a)
            values = [self.envs[m.sender][v.ident] for v in m.send_payload]
            for ref, value in zip(m.recv_payload, values):
                self.envs[m.receiver][ref.ident] = value
            for a in m.post:
                self.run_assignment(m.receiver, a)
        for fin in self.model.protocol.finalise:
            for a in fin.statements:
                self.run_assignment(fin.entity, a)
        return self.envs


def interpret_concrete(
    model: Model, seed: int, constants: dict | None = None
) -> dict[str, dict[str, object]]:
    """Execute one honest protocol run; returns per-entity final bindings.

    ``constants`` optionally injects concrete values for globally declared
    constants (and initial-knowledge variables), e.g. a specific generator
    and modulus; anything not injected is drawn from the seeded stream.
    Identical (model, seed, constants) yield identical results.
    """
    diagnostics = check_semantics(model)
    if diagnostics:
        raise InterpreterError(diagnostics)
    return _Interpreter(model, seed, constants).run()
