"""Uniform diagnostic records emitted by structural and semantic validation."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Diagnostic:
    """One finding, anchored to an element path inside the source document.

    Paths are xPath-like (``/model/protocol/message[1]``); repeatable
    elements always carry a 1-based index, singleton elements do not.
    """

    severity: str  # "error" | "warning"
    path: str
    code: str
    message: str

    def render(self) -> str:
        return f"{self.severity} {self.path} {self.code}: {self.message}"


def error(path: str, code: str, message: str) -> Diagnostic:
    return Diagnostic("error", path, code, message)


def warning(path: str, code: str, message: str) -> Diagnostic:
    return Diagnostic("warning", path, code, message)


def render_all(diagnostics: list[Diagnostic]) -> str:
    """One diagnostic per line, in the order they were reported (document order)."""
    return "\n".join(d.render() for d in diagnostics)


class PsvError(Exception):
    """Raised by operations whose contract is "result or diagnostics"."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__(render_all(self.diagnostics) or "unspecified PSV error")


class ParseError(PsvError):
    """A document failed structural validation or model construction."""


class ExportError(PsvError):
    """An exporter precondition failed; carries the offending diagnostics."""
