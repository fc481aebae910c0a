"""Bundled sample models, stored as canonical-serialization PSV files."""

from __future__ import annotations

from importlib import resources

from ..xml_io import SourceDocument

_NAMES = ("dhke", "needham-schroeder", "needham-schroeder-lowe")


def names() -> tuple[str, ...]:
    return _NAMES


def load(name: str) -> SourceDocument:
    """Canonical PSV bytes of a bundled sample; KeyError on unknown names."""
    if name not in _NAMES:
        raise KeyError(name)
    data = resources.files(__package__).joinpath(f"{name}.psv").read_bytes()
    return SourceDocument(data)
