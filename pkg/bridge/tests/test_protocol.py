import io

import numpy as np
import pytest

from normalbridge import protocol as proto


def test_frame_roundtrip():
    payload = b"\x01\x02\x03\x04"
    buf = io.BytesIO(proto.pack_frame(proto.OP_FWD, payload))
    opcode, got = proto.read_frame(buf)
    assert opcode == proto.OP_FWD and got == payload


def test_header_layout():
    frame = proto.pack_frame(proto.OP_BYE)
    assert frame[:4] == b"NBR1"
    assert len(frame) == 16
    assert int.from_bytes(frame[4:8], "little") == proto.OP_BYE
    assert int.from_bytes(frame[8:16], "little") == 0


def test_bad_magic_rejected():
    frame = b"XXXX" + proto.pack_frame(proto.OP_BYE)[4:]
    with pytest.raises(proto.ProtocolError):
        proto.read_frame(io.BytesIO(frame))


def test_truncated_stream():
    frame = proto.pack_frame(proto.OP_FWD, b"abcd")
    with pytest.raises(EOFError):
        proto.read_frame(io.BytesIO(frame[:-2]))


def test_oversized_length_rejected():
    header = proto.HEADER.pack(proto.MAGIC, proto.OP_FWD, proto.MAX_PAYLOAD + 1)
    with pytest.raises(proto.ProtocolError):
        proto.read_frame(io.BytesIO(header))


def test_hello_roundtrip():
    h = proto.Hello(height=32, width=48, channels=3, caps=7)
    buf = io.BytesIO(proto.pack_hello(h))
    opcode, payload = proto.read_frame(buf)
    assert opcode == proto.OP_HELLO
    assert proto.unpack_hello(payload) == h


def test_tensor_roundtrip_is_exact():
    rng = np.random.default_rng(1)
    t = rng.normal(size=(5, 4, 3)).astype(np.float32)
    back = proto.tensor_from_bytes(proto.tensor_bytes(t), (5, 4, 3), "t")
    np.testing.assert_array_equal(back, t)


def test_tensor_size_checked():
    with pytest.raises(proto.ProtocolError):
        proto.tensor_from_bytes(b"\x00" * 12, (2, 2, 3), "t")
