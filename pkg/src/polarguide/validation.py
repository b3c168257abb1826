"""Input validation helpers for image-shaped grids.

All pipeline arrays are float64 numpy arrays in one of three layouts:
H x W x C radiance grids (C in {1, 3}), H x W x 3 normal maps, and H x W
scalar/boolean grids. These helpers normalize dtypes and fail early with
structured errors instead of letting shape bugs surface deep in the math.
"""

from __future__ import annotations

import numpy as np

from .exceptions import ShapeMismatchError


def as_grid(a, name: str, *, ndim: int | None = None) -> np.ndarray:
    """Return ``a`` as a C-contiguous float64 array, checking dimensionality."""
    arr = np.ascontiguousarray(a, dtype=np.float64)
    if ndim is not None and arr.ndim != ndim:
        raise ShapeMismatchError(name, (f"{ndim}D",), arr.shape)
    return arr


def as_radiance_grid(a, name: str) -> np.ndarray:
    """Return ``a`` as an H x W x C grid with C in {1, 3}.

    A 2D array is promoted to a single-channel grid.
    """
    arr = np.ascontiguousarray(a, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, np.newaxis]
    if arr.ndim != 3 or arr.shape[2] not in (1, 3):
        raise ShapeMismatchError(name, ("H", "W", "C in {1,3}"), arr.shape)
    return arr


def as_normal_grid(a, name: str) -> np.ndarray:
    arr = np.ascontiguousarray(a, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ShapeMismatchError(name, ("H", "W", 3), arr.shape)
    return arr


def check_same_shape(reference: np.ndarray, ref_name: str, **named_grids) -> None:
    """Raise ShapeMismatchError naming the first grid whose shape differs."""
    for name, grid in named_grids.items():
        if grid.shape != reference.shape:
            raise ShapeMismatchError(name, reference.shape, grid.shape)


def check_finite(name: str, arr: np.ndarray) -> None:
    if not np.all(np.isfinite(arr)):
        bad = int(np.size(arr) - np.count_nonzero(np.isfinite(arr)))
        raise ValueError(f"grid '{name}' contains {bad} non-finite values")


def normalize_vectors(n: np.ndarray, eps: float = 1e-30) -> np.ndarray:
    """Normalize the trailing 3-vector axis to unit length."""
    norm = np.sqrt(np.sum(n * n, axis=-1, keepdims=True))
    return n / np.maximum(norm, eps)


def is_unit_normals(n: np.ndarray, tol: float = 1e-6) -> bool:
    norm = np.sqrt(np.sum(n * n, axis=-1))
    return bool(np.all(np.abs(norm - 1.0) <= tol))
