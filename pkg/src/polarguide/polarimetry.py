"""Linear Stokes-vector algebra on per-pixel polarization grids.

A division-of-focal-plane polarization camera captures intensity through
polarizers at 0, 45, 90 and 135 degrees. Those four captures determine the
three linear Stokes components per pixel; degree and angle of linear
polarization follow from them. Only linear polarization is modeled here,
circular components are negligible for passive capture.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .validation import as_radiance_grid, check_finite, check_same_shape

# Guard for the DoLP division. Pixels this dark are always masked out, the
# guard only keeps intermediates finite.
EPS_DIV = 1e-8

# Validity thresholds in normalized radiance units, strict inequalities.
SIGNAL_FLOOR = 0.01
SATURATION_CEIL = 1.0


@dataclass(frozen=True)
class IntensityCapture:
    """Four polarizer-angle captures, each H x W x C in normalized units."""

    i000: np.ndarray
    i045: np.ndarray
    i090: np.ndarray
    i135: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "i000", as_radiance_grid(self.i000, "i000"))
        for name in ("i045", "i090", "i135"):
            object.__setattr__(self, name, as_radiance_grid(getattr(self, name), name))
        check_same_shape(
            self.i000, "i000", i045=self.i045, i090=self.i090, i135=self.i135
        )
        for name in ("i000", "i045", "i090", "i135"):
            check_finite(name, getattr(self, name))

    @property
    def shape(self):
        return self.i000.shape


@dataclass(frozen=True)
class StokesMap:
    """Per-pixel linear Stokes components [s0, s1, s2], each H x W x C."""

    s0: np.ndarray
    s1: np.ndarray
    s2: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "s0", as_radiance_grid(self.s0, "s0"))
        object.__setattr__(self, "s1", as_radiance_grid(self.s1, "s1"))
        object.__setattr__(self, "s2", as_radiance_grid(self.s2, "s2"))
        check_same_shape(self.s0, "s0", s1=self.s1, s2=self.s2)

    @property
    def shape(self):
        return self.s0.shape

    def stacked(self) -> np.ndarray:
        """Stack components along a leading axis, shape 3 x H x W x C."""
        return np.stack([self.s0, self.s1, self.s2], axis=0)


@dataclass(frozen=True)
class PolarizationMap:
    """DoLP in [0, 1] and AoLP in radians, wrapped to [-pi/2, pi/2)."""

    dolp: np.ndarray
    aolp: np.ndarray


@dataclass(frozen=True)
class ValidityMask:
    """Boolean H x W grid; a pixel is valid iff valid in every channel."""

    m: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "m", np.asarray(self.m, dtype=bool))

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.m))

    @property
    def empty(self) -> bool:
        return self.count == 0


def stokes_from_capture(cap: IntensityCapture) -> StokesMap:
    """Compute linear Stokes components from the four angle captures.

    s0 = i0 + i90, s1 = i0 - i90, s2 = i45 - i135, per pixel and channel.
    """
    return StokesMap(
        s0=cap.i000 + cap.i090,
        s1=cap.i000 - cap.i090,
        s2=cap.i045 - cap.i135,
    )


def capture_from_stokes(s: StokesMap) -> IntensityCapture:
    """Synthesize angle captures that invert :func:`stokes_from_capture` exactly."""
    return IntensityCapture(
        i000=(s.s0 + s.s1) / 2.0,
        i045=(s.s0 + s.s2) / 2.0,
        i090=(s.s0 - s.s1) / 2.0,
        i135=(s.s0 - s.s2) / 2.0,
    )


def wrap_aolp(phi: np.ndarray) -> np.ndarray:
    """Wrap an angle grid into the AoLP principal range [-pi/2, pi/2)."""
    return np.mod(phi + np.pi / 2.0, np.pi) - np.pi / 2.0


def dolp_aolp(s: StokesMap) -> PolarizationMap:
    """Degree and angle of linear polarization of a Stokes map.

    Pixels with s0 <= EPS_DIV get dolp = 0 by convention; aolp is the
    half-angle of atan2(s2, s1) wrapped into [-pi/2, pi/2).
    """
    mag = np.sqrt(s.s1 * s.s1 + s.s2 * s.s2)
    dolp = np.where(s.s0 > EPS_DIV, mag / np.maximum(s.s0, EPS_DIV), 0.0)
    aolp = wrap_aolp(0.5 * np.arctan2(s.s2, s.s1))
    aolp = np.where(mag > 0.0, aolp, 0.0)
    return PolarizationMap(dolp=dolp, aolp=aolp)


def validity_mask(s: StokesMap) -> ValidityMask:
    """Physical validity per pixel: signal floor, saturation, Stokes cone.

    A channel is valid iff s0 > 0.01, s0 < 1 and s1^2 + s2^2 <= s0^2; a
    pixel is valid iff all its channels are.
    """
    per_channel = (
        (s.s0 > SIGNAL_FLOOR)
        & (s.s0 < SATURATION_CEIL)
        & (s.s1 * s.s1 + s.s2 * s.s2 <= s.s0 * s.s0)
    )
    return ValidityMask(m=np.all(per_channel, axis=2))
