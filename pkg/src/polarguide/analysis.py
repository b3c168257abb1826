"""Diagnostic experiments: sensitivity maps, noise/eta/material sweeps, ablations.

Sweep outputs are flat lists of row dataclasses so the CLI can serialize
them to CSV directly. All sweeps are deterministic given their seeds, and
guided/unguided errors are always evaluated on the clean scene's validity
mask so rows stay comparable when noise shrinks the usable pixel set.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .backbones import BackboneSession, CorruptedOracleBackbone
from .exceptions import BackboneError
from .guidance import GuidanceConfig, refine
from .metrics import mean_angular_error
from .polarimetry import stokes_from_capture
from .synth import (
    CorruptionSpec,
    Scene,
    SceneSpec,
    Shading,
    SpecularBand,
    add_noise,
    generate,
)


def sensitivity_map(
    session: BackboneSession,
    x: np.ndarray,
    pixel: tuple[int, int],
    normalize_p99: bool = False,
) -> np.ndarray:
    """How strongly each output pixel reacts to perturbing one input pixel.

    One forward-mode pass per input channel with a one-hot tangent at
    ``pixel`` extracts the corresponding Jacobian columns; stacking them
    into per-output-pixel 3 x C blocks and taking Frobenius norms yields an
    H x W sensitivity grid, optionally normalized by its 99th percentile.
    """
    if not session.supports_jvp:
        raise BackboneError("backbone does not support JVP; sensitivity map unavailable")
    h, w, c = session.input_shape
    pi, pj = pixel
    if not (0 <= pi < h and 0 <= pj < w):
        raise ValueError(f"pixel {pixel} outside {h}x{w} grid")
    sq_sum = np.zeros((h, w), dtype=np.float64)
    tangent = np.zeros((h, w, c), dtype=np.float64)
    for ck in range(c):
        tangent[pi, pj, ck] = 1.0
        jvp = session.jvp_input(x, tangent)
        tangent[pi, pj, ck] = 0.0
        sq_sum += np.sum(jvp * jvp, axis=-1)
    out = np.sqrt(sq_sum)
    if normalize_p99:
        scale = np.percentile(out, 99.0)
        if scale > 0.0:
            out = out / scale
    return out


@dataclass(frozen=True)
class NoiseSweepRow:
    sigma: float
    mae_unguided: float
    mae_guided: float


def noise_sweep(
    scene: Scene,
    backbone: BackboneSession,
    cfg: GuidanceConfig,
    sigmas: list[float],
    seed: int = 0,
) -> list[NoiseSweepRow]:
    """Refine under increasing sensor noise on the capture.

    Noise is injected at the intensity-capture level, upstream of the
    Stokes computation. The evaluation mask is the clean scene's.
    """
    rows = []
    for i, sigma in enumerate(sorted(sigmas)):
        cap = add_noise(scene.capture, sigma, seed=seed + i)
        s_obs = stokes_from_capture(cap)
        unguided = mean_angular_error(
            backbone.forward(s_obs.s0), scene.gt_normals, scene.mask
        )
        result = refine(s_obs, backbone, cfg)
        guided = mean_angular_error(result.normals, scene.gt_normals, scene.mask)
        rows.append(NoiseSweepRow(sigma=sigma, mae_unguided=unguided, mae_guided=guided))
    return rows


@dataclass(frozen=True)
class EtaSweepRow:
    eta: float
    mae_final: float
    loss_final: float


def eta_sweep(
    scene: Scene,
    backbone: BackboneSession,
    cfg: GuidanceConfig,
    etas: list[float],
) -> list[EtaSweepRow]:
    """Refine the same observations under different assumed refractive indices."""
    rows = []
    for eta in etas:
        result = refine(scene.stokes, backbone, replace(cfg, eta=eta))
        mae = mean_angular_error(result.normals, scene.gt_normals, scene.mask)
        rows.append(EtaSweepRow(eta=eta, mae_final=mae, loss_final=result.trace.loss[-1]))
    return rows


@dataclass(frozen=True)
class AblationRow:
    variant: str  # "none" | "image" | "joint"
    mae_final: float
    loss_final: float


def variant_ablation(
    scene: Scene,
    backbone: BackboneSession,
    cfg: GuidanceConfig,
) -> list[AblationRow]:
    """Compare no guidance, image-offset-only guidance, and joint guidance."""
    variants = [
        ("none", replace(cfg, steps=0, on_activation_step=0)),
        ("image", replace(cfg, on_activation_step=cfg.steps)),
        ("joint", cfg),
    ]
    rows = []
    for name, variant_cfg in variants:
        result = refine(scene.stokes, backbone, variant_cfg)
        mae = mean_angular_error(result.normals, scene.gt_normals, scene.mask)
        rows.append(AblationRow(variant=name, mae_final=mae, loss_final=result.trace.loss[-1]))
    return rows


def material_presets(base: SceneSpec) -> dict[str, SceneSpec]:
    """Diffuse-only, specular-only and mixed variants of one geometry."""
    band = SpecularBand(center_row=base.height / 2.0, width=base.height / 2.5, peak=0.3)
    dim = Shading(
        light=base.shading.light,
        albedo=base.shading.albedo,
        ambient=0.05,
        diffuse_scale=0.08,
    )
    return {
        "diffuse": replace(base, specular=None),
        "specular": replace(base, shading=dim, specular=band),
        "mixed": replace(base, specular=band),
    }


@dataclass(frozen=True)
class MaterialSweepRow:
    material: str
    mae_unguided: float
    mae_guided: float


def material_sweep(
    base: SceneSpec,
    cfg: GuidanceConfig,
    corruption: CorruptionSpec,
    gain: float = 0.0,
    coupling_seed: int = 0,
    coupling_density: float = 0.01,
) -> list[MaterialSweepRow]:
    """Guidance gains per reflectance regime on a shared geometry."""
    rows = []
    for name, spec in material_presets(base).items():
        scene = generate(spec)
        backbone = CorruptedOracleBackbone(
            scene.gt_normals,
            corruption=corruption,
            gain=gain,
            channels=spec.channels,
            seed=coupling_seed,
            density=coupling_density,
            reference=scene.stokes.s0 if gain != 0.0 else None,
        )
        unguided = mean_angular_error(
            backbone.forward(scene.stokes.s0), scene.gt_normals, scene.mask
        )
        result = refine(scene.stokes, backbone, cfg)
        guided = mean_angular_error(result.normals, scene.gt_normals, scene.mask)
        rows.append(MaterialSweepRow(material=name, mae_unguided=unguided, mae_guided=guided))
    return rows
