"""Protocol-specification compiler toolchain.

Models live as structured PSV documents, are validated semantically
(declarations, typing, knowledge flow) and export mechanically to a
ProVerif script with a correctness query, a Tamarin theory with an
executability lemma, and a runnable two-party C++ program.
"""

from .diagnostics import Diagnostic, ExportError, ParseError, render_all
from .model import Model, free_variables, resolve
from .validator import check_semantics, knowledge_trace
from .xml_io import SourceDocument, parse, serialize, validate_structure

__all__ = [
    "Diagnostic",
    "ExportError",
    "Model",
    "ParseError",
    "SourceDocument",
    "check_semantics",
    "free_variables",
    "knowledge_trace",
    "parse",
    "render_all",
    "resolve",
    "serialize",
    "validate_structure",
]
