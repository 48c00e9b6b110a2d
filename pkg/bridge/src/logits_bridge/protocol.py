"""Wire format: 4-byte big-endian length prefix, then UTF-8 JSON.

Requests look like {"context": [ids] | "text", "want": "logits"} and
successful responses like {"vocab_size": n, "logits": [floats]}.  A
failure is {"error": "message"} on the same connection.  JSON float
serialization round-trips IEEE doubles exactly, so logit values cross
the wire without loss.
"""

from __future__ import annotations

import json
import socket
import struct

MAX_FRAME = 1 << 26


class FrameError(RuntimeError):
    """Stream-level failure: truncated frame or an absurd length prefix."""


def encode_frame(obj) -> bytes:
    payload = json.dumps(obj, separators=(",", ":")).encode("utf-8")
    if len(payload) > MAX_FRAME:
        raise ValueError(f"frame of {len(payload)} bytes exceeds the {MAX_FRAME} limit")
    return struct.pack(">I", len(payload)) + payload


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    chunks = []
    remaining = n
    while remaining:
        chunk = sock.recv(remaining)
        if not chunk:
            raise FrameError("connection closed mid-frame")
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def read_frame(sock: socket.socket):
    """One parsed frame, or None on a clean EOF between frames."""
    header = b""
    while len(header) < 4:
        chunk = sock.recv(4 - len(header))
        if not chunk:
            if header:
                raise FrameError("connection closed mid-frame")
            return None
        header += chunk
    (length,) = struct.unpack(">I", header)
    if length > MAX_FRAME:
        raise FrameError(f"peer announced a {length}-byte frame, limit is {MAX_FRAME}")
    return json.loads(_recv_exact(sock, length).decode("utf-8"))


def write_frame(sock: socket.socket, obj) -> None:
    sock.sendall(encode_frame(obj))
