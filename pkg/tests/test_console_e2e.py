"""Console-against-service integration: runs only when the console is built.

Launches the real HTTP service on a free port and drives the compiled
console modules (frontend/dist) through a 3-annotation live session with
node. The primary suite must pass without this; missing node or an unbuilt
console skips.
"""
import shutil
import socket
import subprocess
import sys
import time
from pathlib import Path

import httpx
import pytest

from selectllm.dataio import DatasetBundle, write_bundle
from selectllm.metrics import MetricKind, build_oracle_matrix, build_similarity_tensor

ROOT = Path(__file__).resolve().parent.parent
DIST = ROOT / "frontend" / "dist"

pytestmark = pytest.mark.skipif(
    shutil.which("node") is None or not (DIST / "app.js").is_file(),
    reason="console not built or node unavailable",
)


def live_bundle_dir(tmp_path) -> Path:
    records = (
        {"query": 0, "reference": "", "outputs": ["the cat sat", "a dog ran"], "text": "Q0"},
        {"query": 1, "reference": "", "outputs": ["blue sky today", "blue sky now"], "text": "Q1"},
        {"query": 2, "reference": "", "outputs": ["fast red car", "slow red car"], "text": "Q2"},
        {"query": 3, "reference": "", "outputs": ["north wind blows", "south wind blows"], "text": "Q3"},
    )
    outputs = [list(r["outputs"]) for r in records]
    refs = ["", "", "", ""]
    bundle = DatasetBundle(
        name="console-demo", models=("left", "right"), metric="token_f1",
        precomputed=False,
        tensor=build_similarity_tensor(outputs, MetricKind.TOKEN_F1),
        oracle=build_oracle_matrix(outputs, refs, MetricKind.TOKEN_F1),
        responses=records,
    )
    return write_bundle(bundle, tmp_path / "bundle")


def free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


def test_console_completes_live_session(tmp_path):
    bundle_dir = live_bundle_dir(tmp_path)
    port = free_port()
    server = subprocess.Popen(
        [sys.executable, "-m", "selectllm.cli", "serve",
         "--bundle", str(bundle_dir), "--port", str(port)],
        stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL,
    )
    base = f"http://127.0.0.1:{port}"
    try:
        for _ in range(100):
            try:
                httpx.get(f"{base}/sessions/probe/report", timeout=1.0)
                break
            except httpx.TransportError:
                time.sleep(0.1)
        else:
            pytest.fail("service did not come up")

        result = subprocess.run(
            ["node", str(ROOT / "frontend" / "test" / "e2e.mjs"), base, "console-demo"],
            capture_output=True, text=True, timeout=60,
        )
        assert result.returncode == 0, result.stdout + result.stderr
        assert "E2E OK" in result.stdout
    finally:
        server.terminate()
        server.wait(timeout=10)
