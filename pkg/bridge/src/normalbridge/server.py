"""Lock-step protocol server: one request in flight, answered from the model."""

from __future__ import annotations

import sys

from . import protocol as proto
from .model import ModelSession

EXIT_PROTOCOL = 4


def serve(session: ModelSession, stdin=None, stdout=None) -> int:
    """Announce the session with HELLO, then answer frames until BYE.

    Returns the process exit code: 0 after a clean BYE, 4 on a malformed
    frame (after sending an ERR frame when the transport still works).
    Shape errors on otherwise well-formed requests produce an ERR frame and
    the loop continues.
    """
    stdin = stdin if stdin is not None else sys.stdin.buffer
    stdout = stdout if stdout is not None else sys.stdout.buffer
    h, w, c = session.height, session.width, session.channels
    caps = proto.CAP_VJP | proto.CAP_JVP | proto.CAP_DETERMINISTIC
    stdout.write(proto.pack_hello(proto.Hello(h, w, c, caps)))
    stdout.flush()

    img_bytes = h * w * c * 4
    nrm_bytes = h * w * 3 * 4

    while True:
        try:
            opcode, payload = proto.read_frame(stdin)
        except EOFError:
            return 0  # client went away; nothing left to answer
        except proto.ProtocolError as exc:
            try:
                stdout.write(proto.pack_frame(proto.OP_ERR, str(exc).encode("utf-8")))
                stdout.flush()
            except OSError:
                pass
            return EXIT_PROTOCOL

        try:
            if opcode == proto.OP_BYE:
                return 0
            if opcode == proto.OP_FWD:
                x = proto.tensor_from_bytes(payload, (h, w, c), "FWD")
                reply = proto.pack_frame(proto.OP_NORMALS, proto.tensor_bytes(session.forward(x)))
            elif opcode == proto.OP_VJP:
                if len(payload) != img_bytes + nrm_bytes:
                    raise proto.ProtocolError(
                        f"VJP payload has {len(payload)} bytes, expected {img_bytes + nrm_bytes}"
                    )
                x = proto.tensor_from_bytes(payload[:img_bytes], (h, w, c), "VJP.x")
                cot = proto.tensor_from_bytes(payload[img_bytes:], (h, w, 3), "VJP.cotangent")
                reply = proto.pack_frame(proto.OP_GRAD, proto.tensor_bytes(session.vjp(x, cot)))
            elif opcode == proto.OP_JVP:
                if len(payload) != 2 * img_bytes:
                    raise proto.ProtocolError(
                        f"JVP payload has {len(payload)} bytes, expected {2 * img_bytes}"
                    )
                x = proto.tensor_from_bytes(payload[:img_bytes], (h, w, c), "JVP.x")
                tan = proto.tensor_from_bytes(payload[img_bytes:], (h, w, c), "JVP.tangent")
                reply = proto.pack_frame(proto.OP_OUT, proto.tensor_bytes(session.jvp(x, tan)))
            else:
                stdout.write(
                    proto.pack_frame(proto.OP_ERR, f"unknown opcode {opcode}".encode())
                )
                stdout.flush()
                return EXIT_PROTOCOL
        except proto.ProtocolError as exc:
            # well-framed request with wrong tensor sizes: report and go on
            stdout.write(proto.pack_frame(proto.OP_ERR, str(exc).encode("utf-8")))
            stdout.flush()
            continue

        stdout.write(reply)
        stdout.flush()
