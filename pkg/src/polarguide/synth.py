"""Synthetic polarimetric scenes for closed-loop experiments.

Analytic geometry gives ground-truth normals; Lambertian shading plus a
configurable specular pattern gives radiance; the forward model renders the
ground-truth Stokes map; angle captures are synthesized so the Stokes
computation inverts them exactly. Corruption and noise injectors model
backbone failure modes and sensor noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .camera import CameraModel, view_field
from .exceptions import ConfigError
from .fresnel import MaterialParams, render_stokes
from .polarimetry import (
    IntensityCapture,
    StokesMap,
    ValidityMask,
    capture_from_stokes,
    stokes_from_capture,
    validity_mask,
)
from .validation import as_normal_grid, normalize_vectors


@dataclass(frozen=True)
class SphereGeometry:
    radius: float
    center: tuple[float, float] | None = None  # (row, col), defaults to image center


@dataclass(frozen=True)
class PlaneGeometry:
    tilt_deg: float  # rotation toward +y away from the camera axis


@dataclass(frozen=True)
class BumpySphereGeometry:
    radius: float
    bump_amplitude: float = 0.15
    bump_frequency: float = 4.0
    seed: int = 0
    center: tuple[float, float] | None = None


@dataclass(frozen=True)
class Shading:
    """Lambertian shading with an ambient floor, per-channel albedo."""

    light: tuple[float, float, float] = (0.3, 0.4, 0.8)
    albedo: tuple[float, ...] = (0.75, 0.68, 0.58)
    ambient: float = 0.12
    diffuse_scale: float = 0.55


@dataclass(frozen=True)
class SpecularLobe:
    """Gaussian image-space highlight, white across channels."""

    center: tuple[float, float]  # (row, col)
    width: float  # gaussian sigma in pixels
    peak: float


@dataclass(frozen=True)
class SpecularBand:
    """Horizontal environment-reflection band."""

    center_row: float
    width: float
    peak: float


@dataclass(frozen=True)
class SceneSpec:
    geometry: SphereGeometry | PlaneGeometry | BumpySphereGeometry
    height: int
    width: int
    channels: int = 3
    shading: Shading = field(default_factory=Shading)
    specular: SpecularLobe | SpecularBand | None = None
    camera: CameraModel = field(default_factory=CameraModel.orthographic)
    eta: float = 1.5


@dataclass(frozen=True)
class Scene:
    """A generated scene: ground truth plus synthesized measurements."""

    gt_normals: np.ndarray
    capture: IntensityCapture
    stokes: StokesMap
    mask: ValidityMask
    l_s: np.ndarray
    object_mask: np.ndarray  # H x W bool, pixels on the object


@dataclass(frozen=True)
class CorruptionSpec:
    """Deterministic normal-map degradation.

    variant: "none" | "gaussian_blur" | "azimuth_flip" | "angular_noise"
    | "composite".
    """

    variant: str
    sigma: float = 0.0  # blur sigma in pixels
    region: np.ndarray | None = None  # azimuth_flip region, H x W bool (None = all)
    sigma_deg: float = 0.0  # angular noise scale
    seed: int = 0
    parts: tuple["CorruptionSpec", ...] = ()

    def __post_init__(self):
        known = ("none", "gaussian_blur", "azimuth_flip", "angular_noise", "composite")
        if self.variant not in known:
            raise ConfigError(f"unknown corruption variant {self.variant!r}", "corruption")


def _grid_coords(h: int, w: int):
    rows = np.arange(h, dtype=np.float64)[:, np.newaxis]
    cols = np.arange(w, dtype=np.float64)[np.newaxis, :]
    return rows, cols


def _sphere_normals(h, w, radius, center, bump=None):
    rows, cols = _grid_coords(h, w)
    cy, cx = center if center is not None else ((h - 1) / 2.0, (w - 1) / 2.0)
    # Camera frame has y up while rows grow downward.
    dx = (cols - cx) / radius
    dy = (cy - rows) / radius
    rr = dx * dx + dy * dy
    inside = rr < 1.0
    dz = np.sqrt(np.clip(1.0 - rr, 0.0, None))
    n = np.zeros((h, w, 3), dtype=np.float64)
    n[:, :, 0] = np.where(inside, dx, 0.0)
    n[:, :, 1] = np.where(inside, dy, 0.0)
    n[:, :, 2] = np.where(inside, dz, 1.0)
    if bump is not None:
        amp, freq, seed = bump
        rng = np.random.default_rng(seed)
        phase = rng.uniform(0.0, 2.0 * np.pi, size=4)
        u = cols / w * 2.0 * np.pi * freq
        v = rows / h * 2.0 * np.pi * freq
        pert = np.zeros_like(n)
        pert[:, :, 0] = amp * np.sin(u + phase[0]) * np.cos(v + phase[1])
        pert[:, :, 1] = amp * np.cos(u + phase[2]) * np.sin(v + phase[3])
        n = np.where(inside[:, :, np.newaxis], normalize_vectors(n + pert), n)
    return n, inside


def _geometry_normals(spec: SceneSpec):
    g = spec.geometry
    h, w = spec.height, spec.width
    if isinstance(g, SphereGeometry):
        return _sphere_normals(h, w, g.radius, g.center)
    if isinstance(g, BumpySphereGeometry):
        return _sphere_normals(
            h, w, g.radius, g.center, bump=(g.bump_amplitude, g.bump_frequency, g.seed)
        )
    if isinstance(g, PlaneGeometry):
        t = np.deg2rad(g.tilt_deg)
        n = np.zeros((h, w, 3), dtype=np.float64)
        n[:, :, 1] = np.sin(t)
        n[:, :, 2] = np.cos(t)
        return n, np.ones((h, w), dtype=bool)
    raise ConfigError(f"unknown geometry {type(g).__name__}", "scene.geometry")


def _specular_field(spec: SceneSpec, obj: np.ndarray) -> np.ndarray:
    h, w, c = spec.height, spec.width, spec.channels
    l_s = np.zeros((h, w, c), dtype=np.float64)
    pat = spec.specular
    if pat is None:
        return l_s
    rows, cols = _grid_coords(h, w)
    if isinstance(pat, SpecularLobe):
        d2 = (rows - pat.center[0]) ** 2 + (cols - pat.center[1]) ** 2
        profile = pat.peak * np.exp(-d2 / (2.0 * pat.width**2))
    elif isinstance(pat, SpecularBand):
        d2 = (rows - pat.center_row) ** 2 + np.zeros_like(cols)
        profile = pat.peak * np.exp(-d2 / (2.0 * pat.width**2))
    else:
        raise ConfigError(f"unknown specular pattern {type(pat).__name__}", "scene.specular")
    l_s[:] = (profile * obj)[:, :, np.newaxis]
    return l_s


def generate(spec: SceneSpec) -> Scene:
    """Generate ground truth and measurements for a scene specification.

    The intensity captures are synthesized from the rendered Stokes map so
    that the capture-to-Stokes conversion is algebraically exact. Background
    pixels carry zero radiance and fall outside the validity mask.
    """
    gt, obj = _geometry_normals(spec)
    sh = spec.shading
    light = np.asarray(sh.light, dtype=np.float64)
    light = light / np.linalg.norm(light)
    lambert = np.clip(np.einsum("hwc,c->hw", gt, light), 0.0, None)
    albedo = np.asarray(sh.albedo[: spec.channels], dtype=np.float64)
    if albedo.size != spec.channels:
        raise ConfigError(
            f"albedo has {albedo.size} entries for {spec.channels} channels",
            "scene.shading.albedo",
        )
    l_d = (sh.ambient + sh.diffuse_scale * lambert)[:, :, np.newaxis] * albedo
    l_d *= obj[:, :, np.newaxis]
    l_s = _specular_field(spec, obj)
    s0 = l_d + l_s
    on_obj = s0[obj]
    if on_obj.size and (on_obj.min() <= 0.0 or on_obj.max() > 1.0):
        raise ConfigError(
            f"scene radiance spans [{on_obj.min():.4f}, {on_obj.max():.4f}], "
            "must lie in (0, 1]; adjust shading/specular levels",
            "scene",
        )
    vf = view_field(spec.camera, spec.height, spec.width)
    rendered = render_stokes(gt, l_s, s0, vf, MaterialParams(eta=spec.eta))
    capture = capture_from_stokes(rendered)
    # The scene's canonical Stokes map is defined through the capture so the
    # capture-to-Stokes conversion inverts bit-exactly (the synthesis above
    # rounds at the half-sum; re-deriving removes that ulp-level drift).
    stokes = stokes_from_capture(capture)
    return Scene(
        gt_normals=gt,
        capture=capture,
        stokes=stokes,
        mask=validity_mask(stokes),
        l_s=l_s,
        object_mask=obj,
    )


def corrupt(n: np.ndarray, c: CorruptionSpec) -> np.ndarray:
    """Apply a deterministic corruption to a normal map, renormalized."""
    n = as_normal_grid(n, "n")
    if c.variant == "none":
        return n.copy()
    if c.variant == "gaussian_blur":
        if c.sigma <= 0.0:
            return n.copy()
        out = np.stack(
            [ndimage.gaussian_filter(n[:, :, k], sigma=c.sigma) for k in range(3)],
            axis=-1,
        )
        return normalize_vectors(out)
    if c.variant == "azimuth_flip":
        region = (
            np.ones(n.shape[:2], dtype=bool) if c.region is None else np.asarray(c.region, bool)
        )
        out = n.copy()
        out[region, 0] = -n[region, 0]
        out[region, 1] = -n[region, 1]
        return out
    if c.variant == "angular_noise":
        rng = np.random.default_rng(c.seed)
        scale = np.deg2rad(c.sigma_deg) * np.sqrt(2.0 / np.pi)
        # Tangent-plane offsets: mean angular displacement is close to the
        # nominal sigma for small angles.
        t1 = np.cross(n, np.array([0.0, 0.0, 1.0]))
        t1_norm = np.linalg.norm(t1, axis=-1, keepdims=True)
        fallback = np.broadcast_to(np.array([1.0, 0.0, 0.0]), n.shape)
        t1 = np.where(t1_norm > 1e-9, t1 / np.maximum(t1_norm, 1e-30), fallback)
        t2 = np.cross(n, t1)
        g = rng.standard_normal(size=n.shape[:2] + (2,)) * scale
        out = n + g[:, :, :1] * t1 + g[:, :, 1:2] * t2
        return normalize_vectors(out)
    if c.variant == "composite":
        out = n
        for part in c.parts:
            out = corrupt(out, part)
        return out
    raise ConfigError(f"unknown corruption variant {c.variant!r}", "corruption")


def add_noise(cap: IntensityCapture, sigma: float, seed: int = 0) -> IntensityCapture:
    """Zero-mean Gaussian sensor noise per pixel, angle and channel.

    Noisy intensities are clamped to be non-negative; sigma = 0 returns the
    capture unchanged.
    """
    if sigma < 0.0:
        raise ValueError(f"noise sigma must be >= 0, got {sigma}")
    if sigma == 0.0:
        return cap
    rng = np.random.default_rng(seed)
    grids = []
    for grid in (cap.i000, cap.i045, cap.i090, cap.i135):
        noisy = grid + rng.normal(0.0, sigma, size=grid.shape)
        grids.append(np.clip(noisy, 0.0, None))
    return IntensityCapture(*grids)
