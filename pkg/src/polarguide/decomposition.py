"""Appearance decomposition and editing on refined results.

With refined normals and the learned specular radiance in hand, the total
radiance splits into diffuse and specular parts, each with its own Stokes
contribution and polarization visualization. Edits act on exactly one
component of the split and recompose by summation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .camera import ViewField
from .exceptions import EditError
from .fresnel import MaterialParams, RadianceSplit, component_stokes
from .polarimetry import StokesMap
from .validation import as_radiance_grid
from .viz import aolp_dolp_image


@dataclass(frozen=True)
class DecompositionResult:
    split: RadianceSplit
    diffuse_stokes: StokesMap
    specular_stokes: StokesMap
    diffuse_polarization: np.ndarray  # H x W x 3 RGB visualization
    specular_polarization: np.ndarray
    combined_polarization: np.ndarray


def decompose(
    s_obs: StokesMap,
    normals: np.ndarray,
    l_s: np.ndarray,
    v: ViewField,
    mat: MaterialParams,
) -> DecompositionResult:
    """Split observed radiance into components and their polarization maps."""
    l_s = as_radiance_grid(l_s, "l_s")
    if np.any(l_s < 0.0) or np.any(l_s > s_obs.s0 + 1e-12):
        raise EditError("specular radiance must lie in [0, s0]")
    l_d = s_obs.s0 - l_s
    diffuse, specular = component_stokes(normals, l_d, l_s, v, mat)
    combined = StokesMap(
        s0=diffuse.s0 + specular.s0,
        s1=diffuse.s1 + specular.s1,
        s2=diffuse.s2 + specular.s2,
    )
    return DecompositionResult(
        split=RadianceSplit(l_d=l_d, l_s=l_s),
        diffuse_stokes=diffuse,
        specular_stokes=specular,
        diffuse_polarization=aolp_dolp_image(diffuse),
        specular_polarization=aolp_dolp_image(specular),
        combined_polarization=aolp_dolp_image(combined),
    )


@dataclass(frozen=True)
class RecolorEdit:
    """Scale the diffuse radiance per channel; specular is untouched."""

    scale: tuple[float, ...]


@dataclass(frozen=True)
class MetallicEdit:
    """Tint and amplify the specular radiance; diffuse is untouched."""

    tint: tuple[float, ...] = (1.0, 1.0, 1.0)
    gain: float = 1.0


def edit(split: RadianceSplit, op: RecolorEdit | MetallicEdit) -> RadianceSplit:
    """Apply an appearance edit to one component of the split.

    Returns the edited split; the recomposed image is its s0. Raises if the
    edit produces negative radiance anywhere.
    """
    channels = split.l_d.shape[2]
    if isinstance(op, RecolorEdit):
        scale = np.asarray(op.scale[:channels], dtype=np.float64)
        if scale.size != channels:
            raise EditError(f"recolor scale needs {channels} entries")
        l_d = split.l_d * scale
        l_s = split.l_s * 1.0
    elif isinstance(op, MetallicEdit):
        tint = np.asarray(op.tint[:channels], dtype=np.float64)
        if tint.size != channels:
            raise EditError(f"metallic tint needs {channels} entries")
        l_d = split.l_d * 1.0
        l_s = split.l_s * (op.gain * tint)
    else:
        raise EditError(f"unknown edit {type(op).__name__}")
    if np.any(l_d < 0.0) or np.any(l_s < 0.0):
        raise EditError("edit produced negative radiance")
    return RadianceSplit(l_d=l_d, l_s=l_s)
