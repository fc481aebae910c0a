"""Build-and-run harness for the emitted C++ program.

The program needs a C++ toolchain, Crypto++, Asio, and the external Channel
class sources (channel.h / channel.cpp). The channel sources are looked up
in METACP_CHANNEL_DIR. When anything is missing the smoke test is skipped.
"""

from __future__ import annotations

import os
import re
import shutil
import subprocess
import time
from pathlib import Path

CXX = "g++"


def missing_requirements() -> list[str]:
    missing = []
    if shutil.which(CXX) is None:
        missing.append("a C++ compiler")
    if not any(
        Path(prefix, "cryptopp", "integer.h").exists()
        for prefix in ("/usr/include", "/usr/local/include")
    ):
        missing.append("Crypto++ headers")
    if not any(
        Path(prefix, name).exists()
        for prefix in ("/usr/include", "/usr/local/include")
        for name in ("asio.hpp", "boost/asio.hpp")
    ):
        missing.append("Asio headers")
    channel_dir = os.environ.get("METACP_CHANNEL_DIR", "")
    if not channel_dir or not (Path(channel_dir) / "channel.h").exists():
        missing.append("the Channel class sources (set METACP_CHANNEL_DIR)")
    return missing


def compile_program(source: str, workdir: Path) -> Path:
    channel_dir = Path(os.environ["METACP_CHANNEL_DIR"])
    cpp_file = workdir / "dhke.cpp"
    cpp_file.write_text(source)
    binary = workdir / "dhke"
    subprocess.run(
        [
            CXX,
            "-std=c++17",
            "-O2",
            "-I",
            str(channel_dir),
            "-o",
            str(binary),
            str(cpp_file),
            str(channel_dir / "channel.cpp"),
            "-lcryptopp",
            "-lpthread",
        ],
        check=True,
        capture_output=True,
    )
    return binary


def run_key_exchange(
    binary: Path, g: int, p: int, port: int, nonces: dict[str, int] | None = None
) -> dict[str, int]:
    """Runs both roles on loopback; returns the printed finalise values."""
    env = dict(os.environ, METACP_PORT=str(port))
    for name, value in (nonces or {}).items():
        env[f"METACP_NONCE_{name}"] = str(value)
    listener = subprocess.Popen(
        [str(binary), str(g), str(p), "Bob"],
        env=env,
        stdout=subprocess.PIPE,
        text=True,
    )
    time.sleep(0.5)  # let the listener bind
    connector = subprocess.run(
        [str(binary), str(g), str(p), "Alice", "localhost"],
        env=env,
        stdout=subprocess.PIPE,
        text=True,
        timeout=60,
    )
    listener_out, _ = listener.communicate(timeout=60)
    keys = {}
    for line in (connector.stdout + listener_out).splitlines():
        matched = re.match(r"(\w+) = (\d+)", line.strip())
        if matched:
            keys[matched.group(1)] = int(matched.group(2))
    return keys
