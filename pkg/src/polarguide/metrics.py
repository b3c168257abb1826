"""Angular-error statistics for normal-map evaluation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import EmptyMaskError, ShapeMismatchError
from .polarimetry import ValidityMask
from .validation import as_normal_grid, check_same_shape, normalize_vectors

ACC_THRESHOLDS_DEG = (11.25, 22.5, 30.0)


@dataclass(frozen=True)
class NormalMetrics:
    """Summary statistics of an angular-error map, angles in degrees.

    Accuracies count pixels with error strictly below each threshold.
    """

    mean: float
    median: float
    rmse: float
    acc_1125: float
    acc_225: float
    acc_30: float
    n_valid: int

    def as_dict(self) -> dict:
        return {
            "mean_deg": self.mean,
            "median_deg": self.median,
            "rmse_deg": self.rmse,
            "acc_11.25": self.acc_1125,
            "acc_22.5": self.acc_225,
            "acc_30": self.acc_30,
            "n_valid": self.n_valid,
        }


def angular_error_map(pred: np.ndarray, gt: np.ndarray, mask: ValidityMask) -> np.ndarray:
    """Per-pixel angle between predicted and ground-truth normals, degrees.

    Inputs are re-normalized so storage quantization cannot bias the angle,
    and the angle is evaluated as atan2(|cross|, dot), which equals
    arccos(dot) on unit vectors but is exact for identical inputs and
    well-conditioned near 0 and 180 degrees. Pixels outside the mask are
    flagged with NaN.
    """
    pred = normalize_vectors(as_normal_grid(pred, "pred"))
    gt = normalize_vectors(as_normal_grid(gt, "gt"))
    check_same_shape(pred, "pred", gt=gt)
    dot = np.sum(pred * gt, axis=-1)
    cross = np.linalg.norm(np.cross(pred, gt), axis=-1)
    err = np.degrees(np.arctan2(cross, dot))
    return np.where(mask.m, err, np.nan)


def summarize(err_map: np.ndarray, mask: ValidityMask) -> NormalMetrics:
    """Statistics over valid pixels of an angular-error map."""
    vals = np.asarray(err_map, dtype=np.float64)[mask.m]
    vals = vals[np.isfinite(vals)]
    if vals.size == 0:
        raise EmptyMaskError("no valid pixels to summarize")
    accs = [float(np.count_nonzero(vals < t)) / vals.size for t in ACC_THRESHOLDS_DEG]
    return NormalMetrics(
        mean=float(np.mean(vals)),
        median=float(np.median(vals)),
        rmse=float(np.sqrt(np.mean(vals * vals))),
        acc_1125=accs[0],
        acc_225=accs[1],
        acc_30=accs[2],
        n_valid=int(vals.size),
    )


def mean_angular_error(pred: np.ndarray, gt: np.ndarray, mask: ValidityMask) -> float:
    """Masked mean angular error in degrees, the headline comparison number."""
    return summarize(angular_error_map(pred, gt, mask), mask).mean


def psnr(pred: np.ndarray, target: np.ndarray, mask: ValidityMask | None = None,
         peak: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB over (optionally masked) pixels.

    Used to score radiance decompositions against a known split. Identical
    grids give +inf.
    """
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ShapeMismatchError("pred", target.shape, pred.shape)
    diff = pred - target
    if mask is not None:
        diff = diff[mask.m]
        if diff.size == 0:
            raise EmptyMaskError("no valid pixels for PSNR")
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return float("inf")
    return float(10.0 * np.log10(peak * peak / mse))
