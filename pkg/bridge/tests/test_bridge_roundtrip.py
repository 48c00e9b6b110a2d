"""End-to-end check: rewriting through the bridge matches a local run.

The client package rewrites a small corpus twice with the same sampler
settings and seed, once against its in-process fixture provider and once
against a bridge server replaying the same fixture over TCP.  The saved
record files must be byte-identical, which only holds if framing, JSON
float round-tripping, and the error-free request path all behave.
"""

import json
from pathlib import Path

import pytest

from logits_bridge.providers import EchoProvider, write_manifest
from logits_bridge.server import BridgeServer

from textpriv.lm import FixtureProvider
from textpriv.mechanism import SamplerConfig
from textpriv.rewriter import rewrite_corpus, save_records
from textpriv.wire import RemoteProvider

FIXTURE = Path(__file__).parent / "data" / "logits_fixture.json"

TEXTS = ["hello world", "world of zebra hello", "of hello: world zebra of"]


def _verdict(num: int, name: str, ok: bool, detail: str = "") -> None:
    suffix = f"  [{detail}]" if detail else ""
    print(f"\nACCEPTANCE {num} {name}: {'PASS' if ok else 'FAIL'}{suffix}")
    assert ok, f"criterion {num} ({name}) failed: {detail}"


@pytest.mark.parametrize(
    "config",
    [
        SamplerConfig(strategy="dp", epsilon=100.0, top_k=5),
        SamplerConfig(strategy="quasi-dp", epsilon=25.0, top_k=None),
        SamplerConfig(strategy="non-dp", top_k=3),
    ],
    ids=lambda c: c.strategy,
)
def test_remote_rewrite_matches_local(tmp_path, config):
    local = FixtureProvider.from_file(FIXTURE)
    local_records = rewrite_corpus(TEXTS, local, config, seed=7)
    local_path = tmp_path / f"local_{config.strategy}.jsonl"
    save_records(local_records, local_path)

    echo = EchoProvider.from_file(FIXTURE)
    manifest = tmp_path / "vocab.json"
    write_manifest(echo.manifest_tokens(), manifest)
    with BridgeServer(echo) as server:
        host, port = server.address
        remote = RemoteProvider.connect(host, port, manifest)
        try:
            remote_records = rewrite_corpus(TEXTS, remote, config, seed=7)
        finally:
            remote.close()
    remote_path = tmp_path / f"remote_{config.strategy}.jsonl"
    save_records(remote_records, remote_path)

    assert remote_path.read_bytes() == local_path.read_bytes()


def test_acceptance_9_bridge_round_trip(tmp_path):
    config = SamplerConfig(strategy="dp", epsilon=100.0, top_k=5)
    local = FixtureProvider.from_file(FIXTURE)
    save_records(
        rewrite_corpus(TEXTS, local, config, seed=42),
        tmp_path / "local.jsonl",
    )

    echo = EchoProvider.from_file(FIXTURE)
    manifest = tmp_path / "vocab.json"
    write_manifest(echo.manifest_tokens(), manifest)
    with BridgeServer(echo) as server:
        host, port = server.address
        remote = RemoteProvider.connect(host, port, manifest)
        try:
            save_records(
                rewrite_corpus(TEXTS, remote, config, seed=42),
                tmp_path / "remote.jsonl",
            )
        finally:
            remote.close()

    local_bytes = (tmp_path / "local.jsonl").read_bytes()
    remote_bytes = (tmp_path / "remote.jsonl").read_bytes()
    rewrites = [json.loads(line)["rewritten"] for line in local_bytes.splitlines()]
    _verdict(
        9,
        "bridge round trip is byte-identical",
        remote_bytes == local_bytes and len(local_bytes) > 0,
        f"{len(TEXTS)} documents, {len(local_bytes)} bytes, rewrites {rewrites!r}",
    )


def test_cli_serves_echo_fixture(tmp_path):
    """Spawn the bridge CLI and drive it with the client package."""
    import re
    import subprocess
    import sys
    import time

    proc = subprocess.Popen(
        [
            sys.executable,
            "-m",
            "logits_bridge.cli",
            "serve",
            "--echo-fixture",
            str(FIXTURE),
            "--listen",
            "127.0.0.1:0",
        ],
        stdout=subprocess.PIPE,
        text=True,
    )
    try:
        line = proc.stdout.readline()
        match = re.search(r"(\d+\.\d+\.\d+\.\d+):(\d+)", line)
        assert match, f"no address in {line!r}"
        host, port = match.group(1), int(match.group(2))

        echo = EchoProvider.from_file(FIXTURE)
        manifest = tmp_path / "vocab.json"
        write_manifest(echo.manifest_tokens(), manifest)
        for _ in range(50):
            try:
                remote = RemoteProvider.connect(host, port, manifest)
                logits = remote.next_logits([4, 3, 5, 8, 7, 6, 4, 3])
                break
            except Exception:
                time.sleep(0.1)
        else:
            pytest.fail("bridge CLI never became reachable")
        assert logits[8] == -0.2
        remote.close()
    finally:
        proc.terminate()
        proc.wait(timeout=10)
