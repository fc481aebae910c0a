"""Detection of the modular-exponentiation group structure of a model.

A model carries a usable group when it declares a naturals set and an
integers-modulo-p set (recognized by hint), an exponentiation function
whose signature is ``Zp x N -> Zp``, and globally declared constants for
the generator (of the modular set) and the modulus (of the naturals set).
Detection is driven by signatures; hints act as tie-breakers only.
"""

from __future__ import annotations

from dataclasses import dataclass

from .diagnostics import Diagnostic, error
from .model import Application, Equation, FuncDecl, Model, VarRef

NATURALS_HINT = "natural numbers"
MODULAR_HINT = "integers modulo p"
EXPONENTIATION_HINT = "group exponentiation"
GENERATOR_HINT = "group generator"
MODULUS_HINT = "group modulus"


@dataclass(frozen=True)
class GroupSpec:
    generator_id: str
    modulus_id: str
    exp_function: FuncDecl
    modular_set: str
    naturals_set: str
    security: int


def _pick(candidates: list, preferred_hint: str, what: str, path: str):
    """Unique candidate, favouring the hinted one when several exist."""
    if not candidates:
        return error(path, "no-group-structure", f"no {what} found")
    if len(candidates) == 1:
        return candidates[0]
    hinted = [c for c in candidates if c.hint == preferred_hint]
    if len(hinted) == 1:
        return hinted[0]
    names = ", ".join(c.ident for c in candidates)
    return error(path, "ambiguous-group", f"multiple candidates for the {what}: {names}")


def detect_group(model: Model):
    """GroupSpec for the model, or a Diagnostic explaining what is missing."""
    naturals = [s for s in model.sets if s.hint == NATURALS_HINT]
    modular = [s for s in model.sets if s.hint == MODULAR_HINT]
    if len(naturals) != 1 or len(modular) != 1:
        return error(
            "/model",
            "no-group-structure",
            f"expected one set hinted '{NATURALS_HINT}' and one hinted '{MODULAR_HINT}'",
        )
    nat, mod = naturals[0].ident, modular[0].ident

    exp_candidates = [
        f
        for f in model.functions
        if f.arity == 2 and f.param_sets == (mod, nat) and f.result_set == mod
    ]
    exp_fn = _pick(exp_candidates, EXPONENTIATION_HINT, f"{mod} x {nat} -> {mod} function", "/model")
    if isinstance(exp_fn, Diagnostic):
        return exp_fn

    generators = [v for v in model.variables if v.is_global_const and v.set_id == mod]
    generator = _pick(generators, GENERATOR_HINT, f"global {mod} constant", "/model")
    if isinstance(generator, Diagnostic):
        return generator

    moduli = [v for v in model.variables if v.is_global_const and v.set_id == nat]
    modulus = _pick(moduli, MODULUS_HINT, f"global {nat} constant", "/model")
    if isinstance(modulus, Diagnostic):
        return modulus

    return GroupSpec(
        generator_id=generator.ident,
        modulus_id=modulus.ident,
        exp_function=exp_fn,
        modular_set=mod,
        naturals_set=nat,
        security=model.security,
    )


def commutativity_equation(model: Model, group: GroupSpec) -> Equation | None:
    """The equation stating exp(exp(g, x), y) = exp(exp(g, y), x), if present.

    Used to swap raw equations for a target tool's built-in group theory.
    """
    f = group.exp_function.ident
    g = group.generator_id

    def split(term) -> tuple[str, str] | None:
        # matches exp(exp(g, a), b) and yields (a, b)
        if not isinstance(term, Application) or term.function != f or len(term.args) != 2:
            return None
        inner, outer_exp = term.args
        if not isinstance(outer_exp, VarRef) or not isinstance(inner, Application):
            return None
        if inner.function != f or len(inner.args) != 2:
            return None
        base, inner_exp = inner.args
        if not isinstance(base, VarRef) or base.ident != g or not isinstance(inner_exp, VarRef):
            return None
        return inner_exp.ident, outer_exp.ident

    for eq in model.equations:
        lhs = split(eq.lhs)
        rhs = split(eq.rhs)
        if lhs and rhs and lhs == (rhs[1], rhs[0]):
            return eq
    return None
