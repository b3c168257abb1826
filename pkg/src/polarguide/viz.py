"""Visualization encodings for normals, errors and polarization maps.

These produce float RGB arrays in [0, 1]; PNG serialization lives with the
CLI. Conventions: normals map to (n + 1) / 2, error images are brighter
where the error is lower, and polarization maps encode the angle of linear
polarization as hue with the degree of polarization as brightness
(HSV, hue = (aolp + pi/2) / pi, saturation 1, value = dolp clipped to 1).
"""

from __future__ import annotations

import numpy as np
from matplotlib.colors import hsv_to_rgb

from .polarimetry import StokesMap, ValidityMask, dolp_aolp


def normal_image(n: np.ndarray) -> np.ndarray:
    return np.clip((np.asarray(n, dtype=np.float64) + 1.0) / 2.0, 0.0, 1.0)


def error_image(err_deg: np.ndarray, mask: ValidityMask, max_deg: float = 45.0) -> np.ndarray:
    """Grayscale error visualization, brighter is lower error.

    Invalid pixels render black.
    """
    err = np.asarray(err_deg, dtype=np.float64)
    shade = 1.0 - np.clip(err / max_deg, 0.0, 1.0)
    shade = np.where(mask.m & np.isfinite(err), shade, 0.0)
    return np.repeat(shade[:, :, np.newaxis], 3, axis=2)


def aolp_dolp_image(s: StokesMap) -> np.ndarray:
    """Polarization visualization of a Stokes map (AoLP hue, DoLP value).

    Multi-channel maps are collapsed to their channel mean before the
    angle/degree extraction.
    """
    mean = StokesMap(
        s0=np.mean(s.s0, axis=2, keepdims=True),
        s1=np.mean(s.s1, axis=2, keepdims=True),
        s2=np.mean(s.s2, axis=2, keepdims=True),
    )
    pol = dolp_aolp(mean)
    hue = (pol.aolp[:, :, 0] + np.pi / 2.0) / np.pi
    value = np.clip(pol.dolp[:, :, 0], 0.0, 1.0)
    hsv = np.stack([np.clip(hue, 0.0, 1.0 - 1e-9), np.ones_like(hue), value], axis=-1)
    return hsv_to_rgb(hsv)


def to_uint8(img: np.ndarray) -> np.ndarray:
    return (np.clip(img, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
