"""Frozen monocular normal-estimator backbones.

A backbone session maps an H x W x C image to an H x W x 3 unit-normal map
and exposes input-side vector-Jacobian products for test-time guidance,
plus Jacobian-vector products for sensitivity analysis. Two toy backbones
with closed-form Jacobians support closed-loop testing; external models
plug in through a child-process bridge speaking the binary frame protocol.
"""

from __future__ import annotations

import shlex
import subprocess
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy import ndimage

from . import bridgeproto as proto
from .exceptions import BackboneError, BridgeError
from .synth import CorruptionSpec, corrupt
from .validation import normalize_vectors

# Offset inputs are clamped into this range before reaching any backbone;
# unbounded offsets can push toy operators into regimes with meaningless
# gradients.
INPUT_CLAMP = (0.0, 1.5)

# Finite-difference fallback refuses grids above this edge length.
FD_SIZE_CAP = 64


class BackboneSession:
    """Interface shared by all backbones."""

    input_shape: tuple[int, int, int]
    has_analytic_vjp: bool = True
    is_deterministic: bool = True
    supports_jvp: bool = True

    def _check_input(self, x: np.ndarray, name: str = "x") -> np.ndarray:
        x = np.ascontiguousarray(x, dtype=np.float64)
        if x.shape != self.input_shape:
            raise BackboneError(
                f"{name} has shape {x.shape}, session expects {self.input_shape}"
            )
        return x

    def forward(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def vjp_input(self, x: np.ndarray, cotangent: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def jvp_input(self, x: np.ndarray, tangent: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _normalize_with_chain(raw: np.ndarray):
    """Unit-normalize trailing 3-vectors and return the pieces the
    normalization Jacobian needs."""
    norm = np.sqrt(np.sum(raw * raw, axis=-1, keepdims=True))
    norm = np.maximum(norm, 1e-30)
    return raw / norm, norm


def _normalize_vjp(unit: np.ndarray, norm: np.ndarray, cot: np.ndarray) -> np.ndarray:
    """Pull a cotangent back through v -> v/|v|."""
    proj = np.sum(cot * unit, axis=-1, keepdims=True)
    return (cot - proj * unit) / norm


def _normalize_jvp(unit: np.ndarray, norm: np.ndarray, tan: np.ndarray) -> np.ndarray:
    proj = np.sum(tan * unit, axis=-1, keepdims=True)
    return (tan - proj * unit) / norm


class LinearSmootherBackbone(BackboneSession):
    """Affine toy backbone: channel mixing of a box-smoothed image.

    raw(p) = bias + mixing[:, :C] @ smoothed(x)(p), then per-pixel
    normalization. Smoothing is a uniform box of the given radius with
    circular boundary, so the underlying linear operator has the same
    closed form at every pixel.
    """

    def __init__(
        self,
        shape: tuple[int, int, int],
        radius: int = 0,
        mixing: np.ndarray | None = None,
        bias: tuple[float, float, float] = (0.0, 0.0, 1.0),
    ):
        h, w, c = shape
        if c not in (1, 3):
            raise BackboneError(f"channel count must be 1 or 3, got {c}")
        self.input_shape = (h, w, c)
        self.radius = int(radius)
        full = np.eye(3) if mixing is None else np.asarray(mixing, dtype=np.float64)
        if full.shape != (3, 3):
            raise BackboneError(f"mixing matrix must be 3x3, got {full.shape}")
        self.mixing = full[:, :c]
        self.bias = np.asarray(bias, dtype=np.float64)

    def _smooth(self, grid: np.ndarray) -> np.ndarray:
        if self.radius == 0:
            return grid
        size = 2 * self.radius + 1
        return ndimage.uniform_filter(grid, size=(size, size, 1), mode="wrap")

    def _raw(self, x: np.ndarray) -> np.ndarray:
        return self.bias + self._smooth(x) @ self.mixing.T

    def kernel_weight(self, out_px: tuple[int, int], in_px: tuple[int, int]) -> float:
        """Closed-form smoothing weight from an input to an output pixel."""
        h, w, _ = self.input_shape
        size = 2 * self.radius + 1
        dr = (out_px[0] - in_px[0]) % h
        dc = (out_px[1] - in_px[1]) % w
        inside = (dr <= self.radius or dr >= h - self.radius) and (
            dc <= self.radius or dc >= w - self.radius
        )
        return 1.0 / (size * size) if inside else 0.0

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = self._check_input(x)
        unit, _ = _normalize_with_chain(self._raw(x))
        return unit

    def vjp_input(self, x: np.ndarray, cotangent: np.ndarray) -> np.ndarray:
        x = self._check_input(x)
        unit, norm = _normalize_with_chain(self._raw(x))
        g = _normalize_vjp(unit, norm, np.asarray(cotangent, dtype=np.float64))
        # Adjoint of (smooth then mix): mix^T then smooth (box kernel is
        # symmetric, circular boundary makes it self-adjoint).
        return self._smooth(g @ self.mixing)

    def jvp_input(self, x: np.ndarray, tangent: np.ndarray) -> np.ndarray:
        x = self._check_input(x)
        unit, norm = _normalize_with_chain(self._raw(x))
        raw_tan = self._smooth(np.asarray(tangent, dtype=np.float64)) @ self.mixing.T
        return _normalize_jvp(unit, norm, raw_tan)


@dataclass(frozen=True)
class ToyBackboneSpec:
    """Declarative description of a toy backbone, CLI/config facing.

    variant "corrupted_oracle" wraps ground-truth normals degraded by a
    corruption, with a seeded sparse input coupling; "linear_smoother" is
    the affine operator above.
    """

    variant: str
    gt_normals: np.ndarray | None = None
    corruption: CorruptionSpec | None = None
    input_coupling_gain: float = 0.0
    coupling_seed: int = 0
    coupling_density: float = 0.01
    coupling_reference: np.ndarray | None = None
    radius: int = 0
    mixing: np.ndarray | None = None


class CorruptedOracleBackbone(BackboneSession):
    """Oracle backbone: corrupted ground-truth normals plus an input coupling.

    forward(x) = normalize(corrupt(gt) + gain * coupling(x - reference)).

    The coupling is a seeded sparse random linear operator (about 1% dense,
    global support) scaled so a unit-magnitude input perturbation produces a
    unit-magnitude normal perturbation; the gain then sets how strongly the
    oracle's output reacts to its input, standing in for the broad, highly
    sensitive Jacobians of real estimators. Centering at a reference image
    keeps the operating point itself at the corrupted ground truth.
    """

    def __init__(
        self,
        gt_normals: np.ndarray,
        corruption: CorruptionSpec | None = None,
        gain: float = 0.0,
        channels: int = 3,
        seed: int = 0,
        density: float = 0.01,
        reference: np.ndarray | None = None,
    ):
        gt = np.ascontiguousarray(gt_normals, dtype=np.float64)
        h, w = gt.shape[:2]
        self.input_shape = (h, w, channels)
        base = gt if corruption is None else corrupt(gt, corruption)
        self._base = normalize_vectors(base)
        self.gain = float(gain)
        self._seed = int(seed)
        self._density = float(density)
        if reference is None:
            self._reference = np.zeros(self.input_shape, dtype=np.float64)
        else:
            self._reference = self._check_input(reference, "reference").copy()
        self._coupling = None  # built lazily; unused when gain is 0

    def _coupling_matrix(self) -> sp.csr_matrix:
        if self._coupling is None:
            h, w, c = self.input_shape
            n_out = h * w * 3
            n_in = h * w * c
            # k couplings per output row, columns balanced so every input
            # coordinate feeds (about) the same number of outputs. Random
            # signs scaled by 1/sqrt(k) give unit row norms, so the operator
            # is near-isometric and gradient signals do not wash out.
            k = max(1, int(round(self._density * n_in)))
            rng = np.random.default_rng(self._seed)
            rows = np.tile(np.arange(n_out, dtype=np.int64), k)
            cols = np.empty(k * n_out, dtype=np.int64)
            reps = -(-n_out // n_in)  # ceil
            for blk in range(k):
                pool = np.tile(np.arange(n_in, dtype=np.int64), reps)[:n_out]
                cols[blk * n_out : (blk + 1) * n_out] = rng.permutation(pool)
            vals = rng.choice([-1.0, 1.0], size=k * n_out) / np.sqrt(k)
            mat = sp.coo_matrix((vals, (rows, cols)), shape=(n_out, n_in))
            self._coupling = mat.tocsr()
        return self._coupling

    def _raw(self, x: np.ndarray) -> np.ndarray:
        if self.gain == 0.0:
            return self._base.copy()
        delta = (x - self._reference).ravel()
        pert = self._coupling_matrix() @ delta
        return self._base + self.gain * pert.reshape(self._base.shape)

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = self._check_input(x)
        unit, _ = _normalize_with_chain(self._raw(x))
        return unit

    def vjp_input(self, x: np.ndarray, cotangent: np.ndarray) -> np.ndarray:
        x = self._check_input(x)
        cot = np.asarray(cotangent, dtype=np.float64)
        if self.gain == 0.0:
            return np.zeros(self.input_shape, dtype=np.float64)
        unit, norm = _normalize_with_chain(self._raw(x))
        g = _normalize_vjp(unit, norm, cot)
        flat = self._coupling_matrix().T @ g.ravel()
        return self.gain * flat.reshape(self.input_shape)

    def jvp_input(self, x: np.ndarray, tangent: np.ndarray) -> np.ndarray:
        x = self._check_input(x)
        tan = np.asarray(tangent, dtype=np.float64)
        if self.gain == 0.0:
            return np.zeros(self._base.shape, dtype=np.float64)
        unit, norm = _normalize_with_chain(self._raw(x))
        raw_tan = self.gain * (self._coupling_matrix() @ tan.ravel()).reshape(self._base.shape)
        return _normalize_jvp(unit, norm, raw_tan)


class FiniteDifferenceVJP(BackboneSession):
    """Test-only wrapper adding central-difference VJP/JVP to a session.

    Cost is one forward per input element and per direction, so use is
    refused above FD_SIZE_CAP pixels per edge.
    """

    has_analytic_vjp = False

    def __init__(self, inner: BackboneSession, step: float = 1e-6):
        h, w, _ = inner.input_shape
        if max(h, w) > FD_SIZE_CAP:
            raise BackboneError(
                f"finite-difference fallback refused for {h}x{w} grids (cap {FD_SIZE_CAP})"
            )
        self.inner = inner
        self.input_shape = inner.input_shape
        self.step = step

    def forward(self, x: np.ndarray) -> np.ndarray:
        return self.inner.forward(x)

    def jvp_input(self, x: np.ndarray, tangent: np.ndarray) -> np.ndarray:
        t = np.asarray(tangent, dtype=np.float64)
        hi = self.inner.forward(x + self.step * t)
        lo = self.inner.forward(x - self.step * t)
        return (hi - lo) / (2.0 * self.step)

    def vjp_input(self, x: np.ndarray, cotangent: np.ndarray) -> np.ndarray:
        cot = np.asarray(cotangent, dtype=np.float64)
        out = np.zeros(self.input_shape, dtype=np.float64)
        flat = out.ravel()
        basis = np.zeros(self.input_shape, dtype=np.float64)
        bflat = basis.ravel()
        for idx in range(flat.size):
            bflat[idx] = 1.0
            flat[idx] = np.sum(self.jvp_input(x, basis) * cot)
            bflat[idx] = 0.0
        return out

    def close(self) -> None:
        self.inner.close()


class BridgeBackbone(BackboneSession):
    """Client for an external backbone served over the frame protocol.

    Spawns the adapter command as a child process, reads its HELLO
    announcement, then issues lock-step request/response frames. One
    request is in flight at a time.
    """

    has_analytic_vjp = True

    def __init__(self, command: list[str] | str, timeout: float = 120.0):
        if isinstance(command, str):
            command = shlex.split(command)
        self._timeout = timeout
        try:
            self._proc = subprocess.Popen(
                command, stdin=subprocess.PIPE, stdout=subprocess.PIPE
            )
        except OSError as exc:
            raise BridgeError(f"failed to spawn bridge {command!r}: {exc}") from exc
        try:
            opcode, payload = proto.read_frame(self._proc.stdout)
        except BridgeError:
            self._kill()
            raise
        if opcode != proto.OP_HELLO:
            self._kill()
            raise BridgeError(f"expected HELLO, got opcode {opcode}")
        hello = proto.unpack_hello(payload)
        self.hello = hello
        self.input_shape = (hello.height, hello.width, hello.channels)
        self.is_deterministic = bool(hello.caps & proto.CAP_DETERMINISTIC)
        self.supports_jvp = bool(hello.caps & proto.CAP_JVP)
        if not hello.caps & proto.CAP_VJP:
            raise BridgeError("bridge does not offer VJP; required for guidance")

    def _kill(self):
        if self._proc.poll() is None:
            self._proc.kill()
            self._proc.wait()

    def _roundtrip(self, opcode: int, payload: bytes, want: int) -> bytes:
        if self._proc.poll() is not None:
            raise BridgeError("bridge process has exited")
        try:
            self._proc.stdin.write(proto.pack_frame(opcode, payload))
            self._proc.stdin.flush()
            got, reply = proto.read_frame(self._proc.stdout)
        except (BrokenPipeError, OSError) as exc:
            self._kill()
            raise BridgeError(f"bridge transport failure: {exc}") from exc
        if got == proto.OP_ERR:
            raise BridgeError(f"bridge error: {reply.decode('utf-8', 'replace')}")
        if got != want:
            raise BridgeError(f"expected opcode {want}, got {got}")
        return reply

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = self._check_input(x)
        reply = self._roundtrip(proto.OP_FWD, proto.tensor_bytes(x), proto.OP_NORMALS)
        h, w, _ = self.input_shape
        return proto.tensor_from_bytes(reply, (h, w, 3), "NORMALS")

    def vjp_input(self, x: np.ndarray, cotangent: np.ndarray) -> np.ndarray:
        x = self._check_input(x)
        payload = proto.tensor_bytes(x) + proto.tensor_bytes(cotangent)
        reply = self._roundtrip(proto.OP_VJP, payload, proto.OP_GRAD)
        return proto.tensor_from_bytes(reply, self.input_shape, "GRAD")

    def jvp_input(self, x: np.ndarray, tangent: np.ndarray) -> np.ndarray:
        if not self.supports_jvp:
            raise BackboneError("bridge declined the JVP capability")
        x = self._check_input(x)
        payload = proto.tensor_bytes(x) + proto.tensor_bytes(tangent)
        reply = self._roundtrip(proto.OP_JVP, payload, proto.OP_OUT)
        h, w, _ = self.input_shape
        return proto.tensor_from_bytes(reply, (h, w, 3), "OUT")

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                self._proc.stdin.write(proto.pack_frame(proto.OP_BYE))
                self._proc.stdin.flush()
                self._proc.stdin.close()
                self._proc.wait(timeout=10.0)
            except (BrokenPipeError, OSError, subprocess.TimeoutExpired):
                self._kill()


def session_from_spec(spec: ToyBackboneSpec, shape: tuple[int, int, int]) -> BackboneSession:
    """Instantiate a toy backbone session for a scene of the given shape."""
    h, w, c = shape
    if spec.variant == "linear_smoother":
        return LinearSmootherBackbone((h, w, c), radius=spec.radius, mixing=spec.mixing)
    if spec.variant == "corrupted_oracle":
        if spec.gt_normals is None:
            raise BackboneError("corrupted_oracle spec needs gt_normals")
        return CorruptedOracleBackbone(
            spec.gt_normals,
            corruption=spec.corruption,
            gain=spec.input_coupling_gain,
            channels=c,
            seed=spec.coupling_seed,
            density=spec.coupling_density,
            reference=spec.coupling_reference,
        )
    raise BackboneError(f"unknown toy backbone variant {spec.variant!r}")
