"""Logits over TCP: length-prefixed JSON frames.

Frame: 4-byte big-endian payload length, then that many bytes of UTF-8
JSON.  Request: {"context": [int ids] | "raw text", "want": "logits"}.
Success response: {"vocab_size": int, "logits": [float, ...]}.  Failure
response: {"error": "message"}; the connection stays usable afterwards.
JSON carries float64 exactly (repr round-trips), so logits survive the
wire bit for bit.
"""

from __future__ import annotations

import json
import socket
import struct
import threading

import numpy as np

from .lm import Vocabulary

MAX_FRAME = 1 << 26


class TransportError(RuntimeError):
    """Connection-level failure (refused, reset, truncated frame)."""


class RemoteError(RuntimeError):
    """The server answered with an {"error": ...} response."""


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
            raise TransportError("connection closed mid-frame")
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def read_frame(sock: socket.socket):
    """Read one frame and parse its JSON payload.

    Returns None on a clean EOF at a frame boundary.
    """
    header = b""
    while len(header) < 4:
        chunk = sock.recv(4 - len(header))
        if not chunk:
            if header:
                raise TransportError("connection closed mid-frame")
            return None
        header += chunk
    (length,) = struct.unpack(">I", header)
    if length > MAX_FRAME:
        raise TransportError(f"peer announced a {length}-byte frame, limit is {MAX_FRAME}")
    return json.loads(_recv_exact(sock, length).decode("utf-8"))


def write_frame(sock: socket.socket, obj) -> None:
    sock.sendall(encode_frame(obj))


class LogitsClient:
    """Small blocking client with reconnect-and-retry."""

    def __init__(self, host: str, port: int, *, retries: int = 3, timeout: float = 10.0):
        if retries < 1:
            raise ValueError(f"retries must be >= 1, got {retries}")
        self.host = host
        self.port = port
        self.retries = retries
        self.timeout = timeout
        self._sock: socket.socket | None = None
        # One request/response exchange at a time per connection, so
        # threads sharing a client cannot interleave frames.
        self._lock = threading.Lock()

    def _connect(self) -> socket.socket:
        if self._sock is None:
            self._sock = socket.create_connection((self.host, self.port), timeout=self.timeout)
        return self._sock

    def close(self) -> None:
        if self._sock is not None:
            try:
                self._sock.close()
            finally:
                self._sock = None

    def __enter__(self) -> "LogitsClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def request(self, message: dict) -> dict:
        last: Exception | None = None
        with self._lock:
            for _ in range(self.retries):
                try:
                    sock = self._connect()
                    write_frame(sock, message)
                    response = read_frame(sock)
                    if response is None:
                        raise TransportError("server closed the connection before answering")
                    return response
                except (OSError, TransportError) as exc:
                    last = exc
                    self.close()
        raise TransportError(f"request failed after {self.retries} attempts: {last}")

    def fetch_logits(self, context) -> np.ndarray:
        if not isinstance(context, str):
            context = [int(i) for i in context]
        response = self.request({"context": context, "want": "logits"})
        if "error" in response:
            raise RemoteError(str(response["error"]))
        logits = np.asarray(response["logits"], dtype=np.float64)
        if logits.shape != (int(response["vocab_size"]),):
            raise RemoteError("response logits length disagrees with its vocab_size")
        return logits


class RemoteProvider:
    """Provider backed by a logits server; token table comes from a manifest."""

    def __init__(self, vocab: Vocabulary, client: LogitsClient):
        self.vocab = vocab
        self.client = client

    @classmethod
    def connect(
        cls, host: str, port: int, vocab_manifest, *, retries: int = 3, timeout: float = 10.0
    ) -> "RemoteProvider":
        vocab = Vocabulary.load(vocab_manifest)
        return cls(vocab, LogitsClient(host, port, retries=retries, timeout=timeout))

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    def next_logits(self, context_ids) -> np.ndarray:
        logits = self.client.fetch_logits(context_ids)
        if logits.size != self.vocab_size:
            raise RemoteError(
                f"server vocabulary is {logits.size}, manifest says {self.vocab_size}"
            )
        return logits

    def close(self) -> None:
        self.client.close()


def _handle_request(provider, message) -> dict:
    if not isinstance(message, dict):
        return {"error": "request must be a JSON object"}
    if message.get("want") != "logits":
        return {"error": f"unsupported want: {message.get('want')!r}"}
    context = message.get("context")
    if isinstance(context, str):
        context_ids = provider.vocab.encode(context)
    elif isinstance(context, list) and all(isinstance(i, int) for i in context):
        context_ids = context
    else:
        return {"error": "context must be a string or a list of token ids"}
    try:
        logits = provider.next_logits(context_ids)
    except ValueError as exc:
        return {"error": str(exc)}
    return {"vocab_size": int(provider.vocab_size), "logits": [float(v) for v in logits]}


class ProviderServer:
    """Serve any provider over the wire protocol.  One thread per client."""

    def __init__(self, provider, host: str = "127.0.0.1", port: int = 0):
        self.provider = provider
        self._listener = socket.create_server((host, port))
        self.address = self._listener.getsockname()[:2]
        self._closing = threading.Event()
        self._accept_thread = threading.Thread(target=self._accept_loop, daemon=True)
        self._accept_thread.start()

    def _accept_loop(self) -> None:
        while not self._closing.is_set():
            try:
                conn, _ = self._listener.accept()
            except OSError:
                return
            threading.Thread(target=self._serve_one, args=(conn,), daemon=True).start()

    def _serve_one(self, conn: socket.socket) -> None:
        with conn:
            while True:
                try:
                    message = read_frame(conn)
                except json.JSONDecodeError:
                    # Framing survived, so the stream is still in sync.
                    try:
                        write_frame(conn, {"error": "payload is not valid JSON"})
                    except OSError:
                        return
                    continue
                except (TransportError, OSError):
                    return
                if message is None:
                    return
                try:
                    write_frame(conn, _handle_request(self.provider, message))
                except OSError:
                    return

    def close(self) -> None:
        self._closing.set()
        self._listener.close()

    def __enter__(self) -> "ProviderServer":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
