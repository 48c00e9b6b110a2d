"""TCP server wrapping one provider, one handler thread per connection."""

from __future__ import annotations

import json
import logging
import socket
import threading

from .protocol import FrameError, read_frame, write_frame

log = logging.getLogger("logits_bridge")


def respond(provider, message, lock: threading.Lock) -> dict:
    if not isinstance(message, dict):
        return {"error": "request must be a JSON object"}
    if message.get("want") != "logits":
        return {"error": f"unsupported want: {message.get('want')!r}"}
    context = message.get("context")
    ids_ok = isinstance(context, list) and all(isinstance(i, int) for i in context)
    if not (isinstance(context, str) or ids_ok):
        return {"error": "context must be a string or a list of token ids"}
    try:
        with lock:
            logits = provider.next_logits(context)
    except Exception as exc:
        # The connection must outlive a bad request, whatever the provider threw.
        return {"error": str(exc)}
    return {"vocab_size": int(provider.vocab_size), "logits": [float(v) for v in logits]}


class BridgeServer:
    """Accepts connections until closed; usable as a context manager."""

    def __init__(self, provider, host: str = "127.0.0.1", port: int = 0):
        self.provider = provider
        self._lock = threading.Lock()  # model forward passes are not reentrant
        self._listener = socket.create_server((host, port))
        self.address = self._listener.getsockname()[:2]
        self._closing = threading.Event()
        self._accept_thread = threading.Thread(target=self._accept_loop, daemon=True)
        self._accept_thread.start()

    def _accept_loop(self) -> None:
        while not self._closing.is_set():
            try:
                conn, peer = self._listener.accept()
            except OSError:
                return
            log.debug("connection from %s", peer)
            threading.Thread(target=self._serve_one, args=(conn,), daemon=True).start()

    def _serve_one(self, conn: socket.socket) -> None:
        with conn:
            while True:
                try:
                    message = read_frame(conn)
                except json.JSONDecodeError:
                    # Length prefix was honoured, so the stream is intact.
                    try:
                        write_frame(conn, {"error": "payload is not valid JSON"})
                    except OSError:
                        return
                    continue
                except (FrameError, OSError):
                    return
                if message is None:
                    return
                try:
                    write_frame(conn, respond(self.provider, message, self._lock))
                except OSError:
                    return

    def close(self) -> None:
        self._closing.set()
        self._listener.close()

    def wait(self) -> None:
        """Block until close() is called from another thread or a signal."""
        self._closing.wait()

    def __enter__(self) -> "BridgeServer":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
