from __future__ import annotations

import subprocess
import sys
import threading
import urllib.error
import urllib.request
from pathlib import Path

import pytest

from metacp import samples
from metacp.service import make_server


def run_cli(*args: str, cwd: Path | None = None) -> subprocess.CompletedProcess:
    return subprocess.run(
        [sys.executable, "-m", "metacp", *args],
        capture_output=True,
        text=True,
        cwd=cwd,
    )


@pytest.fixture()
def dhke_path(tmp_path: Path) -> Path:
    path = tmp_path / "dhke.psv"
    path.write_bytes(samples.load("dhke").data)
    return path


# ---------------------------------------------------------------------------
# validate


def test_validate_clean(dhke_path):
    result = run_cli("validate", str(dhke_path))
    assert result.returncode == 0
    assert result.stdout == ""


def test_validate_diagnostics(tmp_path):
    broken = samples.load("dhke").text().replace('set="Zp"', 'set="Zq"', 1)
    path = tmp_path / "broken.psv"
    path.write_text(broken)
    result = run_cli("validate", str(path))
    assert result.returncode == 1
    assert "undeclared-set" in result.stdout


def test_validate_missing_file(tmp_path):
    result = run_cli("validate", str(tmp_path / "missing.psv"))
    assert result.returncode == 2


def test_validate_malformed_xml(tmp_path):
    path = tmp_path / "junk.psv"
    path.write_text("<model")
    result = run_cli("validate", str(path))
    assert result.returncode == 2
    assert "malformed-xml" in result.stdout


# ---------------------------------------------------------------------------
# export


def test_export_default_names(dhke_path, tmp_path, all_samples):
    from metacp import cpp, proverif, tamarin

    for target, extension in (("proverif", ".pv"), ("tamarin", ".spthy"), ("cpp", ".cpp")):
        result = run_cli("export", "--target", target, str(dhke_path))
        assert result.returncode == 0, result.stdout + result.stderr
    model = all_samples["dhke"]
    assert (tmp_path / "dhke.pv").read_bytes() == proverif.export(model).text.encode()
    assert (tmp_path / "dhke.spthy").read_bytes() == tamarin.export(model).text.encode()
    assert (tmp_path / "dhke.cpp").read_bytes() == cpp.export(model).encode()


def test_export_explicit_output(dhke_path, tmp_path):
    out = tmp_path / "custom.pv"
    result = run_cli("export", "--target", "proverif", "-o", str(out), str(dhke_path))
    assert result.returncode == 0
    assert out.exists()


def test_export_does_not_mutate_input(dhke_path):
    before = dhke_path.read_bytes()
    run_cli("export", "--target", "proverif", str(dhke_path))
    assert dhke_path.read_bytes() == before


def test_export_refuses_overwriting_input(dhke_path):
    result = run_cli("export", "--target", "proverif", "-o", str(dhke_path), str(dhke_path))
    assert result.returncode == 2
    assert dhke_path.read_bytes() == samples.load("dhke").data


def test_export_invalid_model_fails(tmp_path):
    broken = samples.load("dhke").text().replace('from="Alice"', 'from="Carol"', 1)
    path = tmp_path / "broken.psv"
    path.write_text(broken)
    result = run_cli("export", "--target", "proverif", str(path))
    assert result.returncode == 1
    assert "undeclared-entity" in result.stdout
    assert not (tmp_path / "broken.pv").exists()


def test_export_cpp_needs_group(tmp_path):
    path = tmp_path / "ns.psv"
    path.write_bytes(samples.load("needham-schroeder").data)
    result = run_cli("export", "--target", "cpp", str(path))
    assert result.returncode == 1
    assert "no-group-structure" in result.stdout


# ---------------------------------------------------------------------------
# samples


def test_samples_list():
    result = run_cli("samples")
    assert result.returncode == 0
    assert result.stdout.split() == ["dhke", "needham-schroeder", "needham-schroeder-lowe"]


def test_samples_emit():
    result = subprocess.run(
        [sys.executable, "-m", "metacp", "samples", "--emit", "dhke"],
        capture_output=True,
    )
    assert result.returncode == 0
    assert result.stdout == samples.load("dhke").data


def test_samples_emit_unknown():
    result = run_cli("samples", "--emit", "nosuch")
    assert result.returncode == 2


# ---------------------------------------------------------------------------
# service


@pytest.fixture(scope="module")
def service_url():
    server = make_server(0)
    port = server.server_address[1]
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{port}"
    server.shutdown()


def _get(url: str) -> tuple[int, bytes]:
    try:
        with urllib.request.urlopen(url) as response:
            return response.status, response.read()
    except urllib.error.HTTPError as failure:
        return failure.code, failure.read()


def _post(url: str, data: bytes) -> tuple[int, bytes]:
    request = urllib.request.Request(url, data=data, method="POST")
    try:
        with urllib.request.urlopen(request) as response:
            return response.status, response.read()
    except urllib.error.HTTPError as failure:
        return failure.code, failure.read()


def test_service_samples(service_url):
    status, body = _get(f"{service_url}/samples")
    assert status == 200
    assert body.decode().split() == ["dhke", "needham-schroeder", "needham-schroeder-lowe"]
    status, body = _get(f"{service_url}/samples/dhke")
    assert status == 200
    assert body == samples.load("dhke").data
    status, _ = _get(f"{service_url}/samples/nosuch")
    assert status == 404


def test_service_validate(service_url):
    status, body = _post(f"{service_url}/validate", samples.load("dhke").data)
    assert (status, body) == (200, b"")
    status, body = _post(f"{service_url}/validate", b"<model")
    assert status == 400
    assert b"malformed-xml" in body
    broken = samples.load("dhke").text().replace('from="Alice"', 'from="Carol"', 1)
    status, body = _post(f"{service_url}/validate", broken.encode())
    assert status == 422
    assert b"undeclared-entity" in body


def test_service_validate_trace(service_url):
    status, body = _post(f"{service_url}/validate?trace=1", samples.load("dhke").data)
    assert status == 200
    lines = body.decode().splitlines()
    assert "trace Alice after-pre(1) g,x,gx" in lines
    assert "trace Bob after-recv(1) g,gx" in lines


def test_service_export_matches_cli(service_url, dhke_path, tmp_path):
    run_cli("export", "--target", "proverif", str(dhke_path))
    cli_bytes = (tmp_path / "dhke.pv").read_bytes()
    status, body = _post(f"{service_url}/export?target=proverif", samples.load("dhke").data)
    assert status == 200
    assert body == cli_bytes


def test_service_export_unknown_target(service_url):
    status, _ = _post(f"{service_url}/export?target=nope", samples.load("dhke").data)
    assert status == 404


def test_service_export_semantic_failure(service_url):
    status, body = _post(
        f"{service_url}/export?target=cpp", samples.load("needham-schroeder").data
    )
    assert status == 422
    assert b"no-group-structure" in body


def test_service_deterministic(service_url):
    first = _post(f"{service_url}/export?target=tamarin", samples.load("dhke").data)
    second = _post(f"{service_url}/export?target=tamarin", samples.load("dhke").data)
    assert first == second
