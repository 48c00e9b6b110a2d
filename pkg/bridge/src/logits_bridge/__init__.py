"""Sidecar that serves next-token logits over a small TCP protocol.

Echo mode replays canned logits from a fixture file; model mode forwards
a seq2seq checkpoint's raw output logits.  Clients never learn which one
they are talking to.
"""

from .protocol import FrameError, MAX_FRAME, encode_frame, read_frame, write_frame
from .providers import EchoProvider, ModelProvider, write_manifest
from .server import BridgeServer

__version__ = "0.1.0"

__all__ = [
    "FrameError",
    "MAX_FRAME",
    "encode_frame",
    "read_frame",
    "write_frame",
    "EchoProvider",
    "ModelProvider",
    "write_manifest",
    "BridgeServer",
    "__version__",
]
