"""Binary frame protocol for out-of-process backbone adapters.

Frames travel over the child process stdin/stdout as::

    magic (4 bytes, b"NBR1") | opcode (u32 LE) | payload length (u64 LE) | payload

Tensor payloads are little-endian float32, row major, channel last, with no
per-tensor header: shapes are fixed by the HELLO handshake. The adapter
sends HELLO first, announcing its input height, width, channel count and a
capability bitmask; afterwards the client drives a strict request/response
loop (FWD -> NORMALS, VJP -> GRAD, JVP -> OUT) and closes with BYE.
Unrecoverable conditions on either side are signalled with an ERR frame
whose payload is a UTF-8 message.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .exceptions import BridgeError

MAGIC = b"NBR1"
HEADER = struct.Struct("<4sIQ")

OP_HELLO = 1
OP_FWD = 2
OP_NORMALS = 3
OP_VJP = 4
OP_GRAD = 5
OP_JVP = 6
OP_OUT = 7
OP_BYE = 8
OP_ERR = 9

CAP_VJP = 1
CAP_JVP = 2
CAP_DETERMINISTIC = 4

MAX_PAYLOAD = 1 << 31  # sanity bound against corrupted length fields

_HELLO = struct.Struct("<IIII")


@dataclass(frozen=True)
class Hello:
    height: int
    width: int
    channels: int
    caps: int


def pack_frame(opcode: int, payload: bytes = b"") -> bytes:
    return HEADER.pack(MAGIC, opcode, len(payload)) + payload


def read_exact(stream, count: int) -> bytes:
    chunks = []
    remaining = count
    while remaining > 0:
        chunk = stream.read(remaining)
        if not chunk:
            raise BridgeError("bridge stream closed mid-frame")
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def read_frame(stream) -> tuple[int, bytes]:
    header = read_exact(stream, HEADER.size)
    magic, opcode, length = HEADER.unpack(header)
    if magic != MAGIC:
        raise BridgeError(f"bad frame magic {magic!r}")
    if length > MAX_PAYLOAD:
        raise BridgeError(f"frame payload length {length} exceeds limit")
    payload = read_exact(stream, length) if length else b""
    return opcode, payload


def pack_hello(h: Hello) -> bytes:
    return pack_frame(OP_HELLO, _HELLO.pack(h.height, h.width, h.channels, h.caps))


def unpack_hello(payload: bytes) -> Hello:
    if len(payload) != _HELLO.size:
        raise BridgeError(f"HELLO payload has {len(payload)} bytes, expected {_HELLO.size}")
    height, width, channels, caps = _HELLO.unpack(payload)
    return Hello(height=height, width=width, channels=channels, caps=caps)


def tensor_bytes(arr: np.ndarray) -> bytes:
    return np.ascontiguousarray(arr, dtype="<f4").tobytes()


def tensor_from_bytes(payload: bytes, shape: tuple[int, ...], name: str) -> np.ndarray:
    expected = int(np.prod(shape)) * 4
    if len(payload) != expected:
        raise BridgeError(
            f"{name} payload has {len(payload)} bytes, expected {expected} for shape {shape}"
        )
    return np.frombuffer(payload, dtype="<f4").reshape(shape).astype(np.float64)
