"""Command-line front end: validate, export, samples, serve.

Exit codes: 0 clean, 1 diagnostics reported, 2 I/O errors or malformed XML.
No command mutates its input file.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import samples as samples_store
from .diagnostics import Diagnostic, ExportError, ParseError, render_all
from .model import Model
from .validator import check_semantics, document_order
from .xml_io import SourceDocument, parse

TARGET_EXTENSIONS = {"proverif": ".pv", "tamarin": ".spthy", "cpp": ".cpp"}


def _read(path: str) -> SourceDocument | int:
    try:
        return SourceDocument(Path(path).read_bytes())
    except OSError as failure:
        print(f"error: cannot read {path}: {failure}", file=sys.stderr)
        return 2


def _load_model(doc: SourceDocument) -> Model | tuple[int, list[Diagnostic]]:
    """Model, or (exit code, diagnostics); malformed XML exits 2."""
    try:
        model = parse(doc)
    except ParseError as failure:
        if any(d.code == "malformed-xml" for d in failure.diagnostics):
            return 2, failure.diagnostics
        return 1, failure.diagnostics
    diagnostics = check_semantics(model)
    if diagnostics:
        return 1, diagnostics
    return model


def cmd_validate(args: argparse.Namespace) -> int:
    doc = _read(args.file)
    if isinstance(doc, int):
        return doc
    outcome = _load_model(doc)
    if isinstance(outcome, tuple):
        code, diagnostics = outcome
        print(render_all(diagnostics))
        return code
    return 0


def _render_artifact(model: Model, target: str) -> bytes:
    from . import cpp, proverif, tamarin

    if target == "proverif":
        return proverif.export(model).text.encode()
    if target == "tamarin":
        return tamarin.export(model).text.encode()
    return cpp.export(model).encode()


def cmd_export(args: argparse.Namespace) -> int:
    doc = _read(args.file)
    if isinstance(doc, int):
        return doc
    outcome = _load_model(doc)
    if isinstance(outcome, tuple):
        code, diagnostics = outcome
        print(render_all(diagnostics))
        return code
    try:
        artifact = _render_artifact(outcome, args.target)
    except ExportError as failure:
        print(render_all(document_order(failure.diagnostics)))
        return 1
    out_path = Path(args.output) if args.output else Path(args.file).with_suffix(
        TARGET_EXTENSIONS[args.target]
    )
    if out_path.resolve() == Path(args.file).resolve():
        print(f"error: refusing to overwrite the input file {args.file}", file=sys.stderr)
        return 2
    out_path.write_bytes(artifact)
    return 0


def cmd_samples(args: argparse.Namespace) -> int:
    if args.emit is None:
        for name in samples_store.names():
            print(name)
        return 0
    try:
        doc = samples_store.load(args.emit)
    except KeyError:
        print(f"error: unknown sample {args.emit}", file=sys.stderr)
        return 2
    sys.stdout.buffer.write(doc.data)
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    from . import service

    service.serve(args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="metacp",
        description="Validate protocol models and export them to ProVerif, Tamarin or C++.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    validate = commands.add_parser("validate", help="structural and semantic checks")
    validate.add_argument("file")
    validate.set_defaults(run=cmd_validate)

    export = commands.add_parser("export", help="export a model to a target language")
    export.add_argument("--target", required=True, choices=sorted(TARGET_EXTENSIONS))
    export.add_argument("-o", "--output", default=None)
    export.add_argument("file")
    export.set_defaults(run=cmd_export)

    samples = commands.add_parser("samples", help="list or emit bundled sample models")
    samples.add_argument("--emit", default=None, metavar="NAME")
    samples.set_defaults(run=cmd_samples)

    serve = commands.add_parser("serve", help="run the local validate/export service")
    serve.add_argument(
        "--port",
        type=int,
        default=int(os.environ.get("METACP_PORT", "8788")),
    )
    serve.set_defaults(run=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.run(args)


if __name__ == "__main__":
    sys.exit(main())
