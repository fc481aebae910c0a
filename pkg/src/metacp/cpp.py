"""Emission of a runnable two-party C++ network program from a model.

The emitted file is one translation unit implementing both roles; the role
is selected by a command-line entity argument. Big-integer arithmetic, the
modular-exponentiation helper and nonce sampling come from Crypto++; the
socket transport is the external Asio-based Channel class (channel.h and
channel.cpp are compiled alongside, see the build line in the emitted
header). The generator and modulus are program arguments; the peer host is
an optional argument defaulting to localhost. The receiver of the first
message listens, the sender connects. Big integers travel as 4-byte
big-endian length-prefixed magnitude bytes.

Only models with a detected modular-exponentiation group structure and
exactly two entities are supported.
"""

from __future__ import annotations

from dataclasses import dataclass

from .diagnostics import Diagnostic, ExportError, error
from .groups import GroupSpec, detect_group as _detect_group
from .model import (
    Application,
    Assignment,
    Message,
    Model,
    SetRef,
    Term,
    VarRef,
    resolve,
)
from .groups import MODULAR_HINT, NATURALS_HINT
from .validator import check_semantics

DEFAULT_PORT = 4433

RESERVED = frozenset(
    """
    alignas alignof and and_eq asm auto bitand bitor bool break case catch
    char char16_t char32_t class compl const constexpr const_cast continue
    decltype default delete do double dynamic_cast else enum explicit export
    extern false float for friend goto if inline int long main mutable
    namespace new noexcept not not_eq nullptr operator or or_eq private
    protected public register reinterpret_cast return short signed sizeof
    static static_assert static_cast struct switch template this thread_local
    throw true try typedef typeid typename union unsigned using virtual void
    volatile wchar_t while xor xor_eq exp abs pow
    """.split()
)


def detect_group(model: Model):
    """Re-exported group detection (GroupSpec or Diagnostic)."""
    return _detect_group(model)


def sanitize(ident: str) -> str:
    return ident + "_fn" if ident in RESERVED else ident


@dataclass
class _Emitter:
    model: Model
    group: GroupSpec

    def __post_init__(self) -> None:
        self.exp_name = sanitize(self.group.exp_function.ident)
        self.gen = sanitize(self.group.generator_id)
        self.mod = sanitize(self.group.modulus_id)

    def render_term(self, term: Term) -> str:
        if isinstance(term, VarRef):
            return sanitize(term.ident)
        if term.function == self.group.exp_function.ident:
            args = ", ".join(self.render_term(a) for a in term.args)
            return f"{self.exp_name}({args})"
        raise ExportError(
            [
                error(
                    "/model",
                    "unsupported-function",
                    f"function {term.function} has no C++ implementation",
                )
            ]
        )

    def sampler_for(self, set_id: str) -> str:
        decl = resolve(self.model, set_id, "set")
        hint = decl.hint if decl is not None else None
        if hint == NATURALS_HINT:
            return "sample_naturals"
        if hint == MODULAR_HINT:
            return "sample_modular"
        raise ExportError(
            [error("/model", "unsupported-set", f"cannot sample {set_id} values in C++")]
        )

    def statement_lines(self, statements) -> list[str]:
        lines = []
        for a in statements:
            target = sanitize(a.target)
            if isinstance(a.source, SetRef):
                sampler = self.sampler_for(a.source.ident)
                lines.append(
                    f'Integer {target} = sample_or_override("{a.target}", {sampler});'
                )
            else:
                lines.append(f"Integer {target} = {self.render_term(a.source)};")
        return lines

    def role_lines(self, entity: str) -> list[str]:
        lines: list[str] = []
        for m in self.model.protocol.messages:
            if m.sender == entity:
                lines += self.statement_lines(m.pre)
                for v in m.send_payload:
                    lines.append(f"send_integer(channel, {sanitize(v.ident)});")
            if m.receiver == entity:
                for v in m.recv_payload:
                    lines.append(f"Integer {sanitize(v.ident)} = recv_integer(channel);")
                lines += self.statement_lines(m.post)
        for fin in self.model.protocol.finalise:
            if fin.entity != entity:
                continue
            lines += self.statement_lines(fin.statements)
            for a in fin.statements:
                target = sanitize(a.target)
                lines.append(f'std::cout << "{a.target} = " << {target} << std::endl;')
        return lines


def export(model: Model) -> str:
    """The program text; deterministic bytes. Requires a clean two-party
    model with a detected group structure."""
    diagnostics = check_semantics(model)
    if diagnostics:
        raise ExportError(diagnostics)
    group = _detect_group(model)
    if isinstance(group, Diagnostic):
        raise ExportError([group])
    entities = model.protocol.entities
    if len(entities) != 2:
        raise ExportError(
            [
                error(
                    "/model/protocol",
                    "not-two-party",
                    f"the C++ target supports exactly two entities, got {len(entities)}",
                )
            ]
        )

    emitter = _Emitter(model, group)
    first = model.protocol.messages[0]
    connector, listener = first.sender, first.receiver
    gen, mod, bits = emitter.gen, emitter.mod, group.security

    out = []
    push = out.append
    push(f'// Two-party protocol program generated from the "{model.ident}" model.')
    push("//")
    push("// Build (Crypto++, Asio and the external Channel class are required;")
    push("// channel.h / channel.cpp provide the Asio-based socket transport):")
    push(f"//   g++ -std=c++17 -O2 -o {model.ident} {model.ident}.cpp channel.cpp -lcryptopp -lpthread")
    push("//")
    entity_choices = "|".join(e.ident for e in entities)
    push(f"// Usage: ./{model.ident} <{group.generator_id}> <{group.modulus_id}> "
         f"<{entity_choices}> [host]")
    push(f"//   {group.generator_id}: group generator, decimal")
    push(f"//   {group.modulus_id}: group modulus, decimal")
    push("//   host: peer to connect to, localhost if omitted")
    push(f"// The listening port is {DEFAULT_PORT}, overridable through METACP_PORT.")
    push(f"// {listener} listens for the first message; {connector} connects.")
    push("//")
    push("// Expected Channel interface:")
    push("//   Channel(const std::string& host, int port);  // connect")
    push("//   explicit Channel(int port);                  // listen, accept one peer")
    push("//   void send(const std::string& data);")
    push("//   std::string receive(std::size_t size);")
    push("")
    push("#include <cstdlib>")
    push("#include <iostream>")
    push("#include <stdexcept>")
    push("#include <string>")
    push("")
    push("#include <cryptopp/integer.h>")
    push("#include <cryptopp/nbtheory.h>")
    push("#include <cryptopp/osrng.h>")
    push("")
    push('#include "channel.h"')
    push("")
    push("using CryptoPP::Integer;")
    push("")
    push("namespace {")
    push("")
    push(f"Integer {gen};  // group generator, from argv")
    push(f"Integer {mod};  // group modulus, from argv")
    push("")
    push("CryptoPP::AutoSeededRandomPool rng;")
    push("")
    push(f"// modular exponentiation: base^e mod {mod}, where {mod} references the")
    push("// global modulus above")
    push(f"Integer {emitter.exp_name}(const Integer& base, const Integer& e) {{")
    push(f"    return CryptoPP::a_exp_b_mod_c(base, e, {mod});")
    push("}")
    push("")
    push(f"Integer sample_naturals() {{  // uniform in [2, 2^{bits})")
    push(f"    return Integer(rng, Integer(2), Integer::Power2({bits}) - Integer::One());")
    push("}")
    push("")
    push(f"Integer sample_modular() {{  // uniform in [1, {mod})")
    push(f"    return Integer(rng, Integer::One(), {mod} - Integer::One());")
    push("}")
    push("")
    push("// test hook: METACP_NONCE_<name> pins a sampled value (decimal)")
    push("Integer sample_or_override(const char* name, Integer (*sample)()) {")
    push('    std::string key = std::string("METACP_NONCE_") + name;')
    push("    if (const char* value = std::getenv(key.c_str())) {")
    push("        return Integer(value);")
    push("    }")
    push("    return sample();")
    push("}")
    push("")
    push("void send_integer(Channel& channel, const Integer& value) {")
    push("    std::size_t size = value.MinEncodedSize();")
    push("    std::string data(4 + size, '\\0');")
    push("    for (int i = 0; i < 4; ++i) {")
    push("        data[i] = static_cast<char>((size >> (8 * (3 - i))) & 0xff);")
    push("    }")
    push("    value.Encode(reinterpret_cast<CryptoPP::byte*>(&data[4]), size);")
    push("    channel.send(data);")
    push("}")
    push("")
    push("Integer recv_integer(Channel& channel) {")
    push("    std::string header = channel.receive(4);")
    push("    std::size_t size = 0;")
    push("    for (int i = 0; i < 4; ++i) {")
    push("        size = (size << 8) | static_cast<unsigned char>(header[i]);")
    push("    }")
    push("    std::string data = channel.receive(size);")
    push("    Integer value;")
    push("    value.Decode(reinterpret_cast<const CryptoPP::byte*>(data.data()), size);")
    push("    return value;")
    push("}")
    push("")
    for entity in entities:
        push(f"void run_{sanitize(entity.ident)}(Channel& channel) {{")
        for line in emitter.role_lines(entity.ident):
            push(f"    {line}")
        push("}")
        push("")
    push("}  // namespace")
    push("")
    push("int main(int argc, char** argv) {")
    push("    if (argc < 4) {")
    push(f'        std::cerr << "usage: " << argv[0] << " <{group.generator_id}> '
         f'<{group.modulus_id}> <entity> [host]" << std::endl;')
    push("        return 2;")
    push("    }")
    push(f"    {gen} = Integer(argv[1]);")
    push(f"    {mod} = Integer(argv[2]);")
    push("    std::string entity = argv[3];")
    push('    std::string host = argc > 4 ? argv[4] : "localhost";')
    push(f"    int port = {DEFAULT_PORT};")
    push('    if (const char* env = std::getenv("METACP_PORT")) {')
    push("        port = std::atoi(env);")
    push("    }")
    push("    try {")
    first_branch = True
    for entity in entities:
        keyword = "if" if first_branch else "} else if"
        first_branch = False
        push(f'        {keyword} (entity == "{entity.ident}") {{')
        if entity.ident == listener:
            push("            Channel channel(port);")
        else:
            push("            Channel channel(host, port);")
        push(f"            run_{sanitize(entity.ident)}(channel);")
    push("        } else {")
    push('            std::cerr << "unknown entity: " << entity << std::endl;')
    push("            return 2;")
    push("        }")
    push("    } catch (const std::exception& failure) {")
    push("        std::cerr << failure.what() << std::endl;")
    push("        return 1;")
    push("    }")
    push("    return 0;")
    push("}")
    return "\n".join(out) + "\n"
