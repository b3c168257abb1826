"""Per-pixel viewing rays for orthographic and FoV-derived pinhole cameras."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError
from .validation import normalize_vectors


@dataclass(frozen=True)
class CameraModel:
    """Viewing-ray model, either orthographic or perspective.

    The perspective variant derives its focal lengths from a horizontal
    field of view: f = W / (2 tan(fov/2)), f_x = f, f_y = f * H / W.
    Pixel axes follow image convention (u right, v down); the camera frame
    has y up and z toward the camera, so rays tilt as (c_x - u, c_y - v, f).
    """

    variant: str  # "orthographic" | "perspective"
    fov_deg: float = 0.0
    width: int = 0
    height: int = 0
    c_x: float | None = None
    c_y: float | None = None

    def __post_init__(self):
        if self.variant not in ("orthographic", "perspective"):
            raise ConfigError(f"unknown camera variant {self.variant!r}", "camera.variant")
        if self.variant == "perspective":
            if not (0.0 < self.fov_deg < 180.0):
                raise ConfigError(
                    f"fov_deg must lie in (0, 180), got {self.fov_deg}", "camera.fov_deg"
                )
            if self.width <= 0 or self.height <= 0:
                raise ConfigError("perspective camera needs positive width/height", "camera")

    @staticmethod
    def orthographic() -> "CameraModel":
        return CameraModel(variant="orthographic")

    @staticmethod
    def perspective(fov_deg: float, width: int, height: int,
                    c_x: float | None = None, c_y: float | None = None) -> "CameraModel":
        return CameraModel(variant="perspective", fov_deg=fov_deg,
                           width=width, height=height, c_x=c_x, c_y=c_y)

    @property
    def focal(self) -> float:
        if self.variant != "perspective":
            raise ConfigError("orthographic camera has no focal length", "camera")
        return self.width / (2.0 * np.tan(np.deg2rad(self.fov_deg) / 2.0))

    def principal_point(self) -> tuple[float, float]:
        cx = (self.width - 1) / 2.0 if self.c_x is None else self.c_x
        cy = (self.height - 1) / 2.0 if self.c_y is None else self.c_y
        return cx, cy


@dataclass(frozen=True)
class ViewField:
    """Unit viewing direction per pixel, from the surface toward the camera."""

    v: np.ndarray


def view_field(cam: CameraModel, height: int, width: int) -> ViewField:
    """Build the per-pixel viewing-direction field for a camera.

    Orthographic cameras view every pixel along (0, 0, 1). Perspective
    cameras unproject each pixel through the pinhole and normalize.
    """
    if cam.variant == "orthographic":
        v = np.zeros((height, width, 3), dtype=np.float64)
        v[:, :, 2] = 1.0
        return ViewField(v=v)

    if (cam.width, cam.height) != (width, height):
        raise ConfigError(
            f"camera was built for {cam.width}x{cam.height}, scene is {width}x{height}",
            "camera",
        )
    f = cam.focal
    f_x = f
    f_y = f * cam.height / cam.width
    cx, cy = cam.principal_point()
    u = np.arange(width, dtype=np.float64)[np.newaxis, :]
    vv = np.arange(height, dtype=np.float64)[:, np.newaxis]
    d = np.empty((height, width, 3), dtype=np.float64)
    d[:, :, 0] = (cx - u) / f_x
    d[:, :, 1] = (cy - vv) / f_y
    d[:, :, 2] = 1.0
    return ViewField(v=normalize_vectors(d))
