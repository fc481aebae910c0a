"""Local HTTP service exposing validate/export/samples to scripts and the
browser editor.

Endpoints (all responses deterministic for identical inputs):

  GET  /samples            bundled model names, one per line
  GET  /samples/<name>     canonical PSV bytes of one bundled model
  POST /validate[?trace=1] body = PSV bytes; diagnostics as line-oriented
                           text (identical to CLI output); with trace=1 and
                           a clean model, the computed knowledge trace is
                           appended, one "trace <entity> <label> <vars>"
                           line per snapshot
  POST /export?target=T    body = PSV bytes; artifact bytes on success

Status codes: 200 clean, 400 malformed or structurally invalid PSV,
404 unknown path/sample/target, 422 semantic diagnostics. Requests are
handled concurrently; every request parses its own model.
"""

from __future__ import annotations

from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from . import samples as samples_store
from .diagnostics import ExportError, ParseError, render_all
from .validator import _knowledge_flow, check_semantics, document_order
from .xml_io import SourceDocument, build_model, validate_structure

_EXPORTERS = {}


def _exporters():
    # deferred so importing the service stays cheap
    if not _EXPORTERS:
        from . import cpp, proverif, tamarin

        _EXPORTERS.update(
            {
                "proverif": lambda m: proverif.export(m).text.encode(),
                "tamarin": lambda m: tamarin.export(m).text.encode(),
                "cpp": lambda m: cpp.export(m).encode(),
            }
        )
    return _EXPORTERS


def _build_staged(data: bytes):
    """Model, or (400, body) for malformed or structurally invalid input."""
    doc = SourceDocument(data)
    try:
        structural = validate_structure(doc)
    except ParseError as failure:  # not well-formed XML
        return 400, (render_all(failure.diagnostics) + "\n").encode()
    if structural:
        return 400, (render_all(structural) + "\n").encode()
    return build_model(doc)


def validate_bytes(data: bytes, with_trace: bool = False) -> tuple[int, bytes]:
    """(status, body) for a validate request.

    With ``trace=1`` the knowledge trace is appended even when semantic
    errors remain: the editor renders what each entity knows while the
    design is still under construction.
    """
    model = _build_staged(data)
    if isinstance(model, tuple):
        return model
    diagnostics = check_semantics(model)
    status = 422 if any(d.severity == "error" for d in diagnostics) else 200
    body = render_all(diagnostics)
    if with_trace:
        trace, _, _ = _knowledge_flow(model)
        rendered = trace.render()
        if rendered:
            body = (body + "\n" if body else "") + rendered
    return status, (body + "\n").encode() if body else b""


def export_bytes(data: bytes, target: str) -> tuple[int, bytes]:
    """(status, body) for an export request."""
    exporter = _exporters().get(target)
    if exporter is None:
        return 404, f"unknown export target: {target}\n".encode()
    model = _build_staged(data)
    if isinstance(model, tuple):
        return model
    try:
        return 200, exporter(model)
    except ExportError as failure:
        return 422, (render_all(document_order(failure.diagnostics)) + "\n").encode()


class _Handler(BaseHTTPRequestHandler):
    server_version = "metacp"

    def log_message(self, *args) -> None:  # quiet by default
        pass

    def _reply(self, status: int, body: bytes, content_type: str = "text/plain; charset=utf-8") -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.end_headers()
        self.wfile.write(body)

    def do_OPTIONS(self) -> None:
        self._reply(204, b"")

    def do_GET(self) -> None:
        url = urlparse(self.path)
        if url.path == "/samples":
            body = "\n".join(samples_store.names()) + "\n"
            self._reply(200, body.encode())
        elif url.path.startswith("/samples/"):
            name = url.path[len("/samples/"):]
            try:
                self._reply(200, samples_store.load(name).data, "application/xml")
            except KeyError:
                self._reply(404, f"unknown sample: {name}\n".encode())
        else:
            self._reply(404, b"not found\n")

    def do_POST(self) -> None:
        url = urlparse(self.path)
        query = parse_qs(url.query)
        length = int(self.headers.get("Content-Length", "0"))
        data = self.rfile.read(length)
        if url.path == "/validate":
            with_trace = query.get("trace", ["0"])[0] in ("1", "true")
            status, body = validate_bytes(data, with_trace)
            self._reply(status, body)
        elif url.path == "/export":
            target = query.get("target", [""])[0]
            status, body = export_bytes(data, target)
            content_type = "application/octet-stream" if status == 200 else "text/plain; charset=utf-8"
            self._reply(status, body, content_type)
        else:
            self._reply(404, b"not found\n")


def make_server(port: int) -> ThreadingHTTPServer:
    return ThreadingHTTPServer(("127.0.0.1", port), _Handler)


def serve(port: int) -> None:
    """Run the service until interrupted."""
    with make_server(port) as server:
        host, bound_port = server.server_address[:2]
        print(f"metacp service listening on http://{host}:{bound_port}")
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            pass
