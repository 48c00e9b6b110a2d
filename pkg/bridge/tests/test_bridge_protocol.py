import json
import socket
import struct

import pytest

from logits_bridge.protocol import (
    MAX_FRAME,
    FrameError,
    encode_frame,
    read_frame,
    write_frame,
)


def test_frame_layout_is_big_endian_length_prefixed():
    frame = encode_frame({"want": "logits"})
    assert frame[:4] == struct.pack(">I", len(frame) - 4)
    assert json.loads(frame[4:].decode("utf-8")) == {"want": "logits"}


def test_floats_round_trip_exactly():
    left, right = socket.socketpair()
    try:
        payload = {"logits": [0.1, -2.3, 1 / 3, 2**-45, 1e300]}
        write_frame(left, payload)
        assert read_frame(right) == payload
    finally:
        left.close()
        right.close()


def test_clean_eof_returns_none():
    left, right = socket.socketpair()
    left.close()
    try:
        assert read_frame(right) is None
    finally:
        right.close()


def test_truncated_frame_raises():
    left, right = socket.socketpair()
    try:
        left.sendall(struct.pack(">I", 16) + b"short")
        left.close()
        with pytest.raises(FrameError):
            read_frame(right)
    finally:
        right.close()


def test_frame_limits():
    with pytest.raises(ValueError):
        encode_frame({"blob": "x" * MAX_FRAME})
    left, right = socket.socketpair()
    try:
        left.sendall(struct.pack(">I", MAX_FRAME + 1))
        with pytest.raises(FrameError):
            read_frame(right)
    finally:
        left.close()
        right.close()
