"""Demonstration backbone: a tiny convolutional normal estimator.

Small enough (a few thousand parameters) that forward passes and exact
autodiff products run in milliseconds on CPU, yet genuinely nonlinear with
a dense input-to-output Jacobian. Initialization is seeded and inference
runs in float64 for reproducible, precise gradient checks; a fixed bias
toward the camera keeps the pre-normalization output away from zero.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn


class TinyNormalNet(nn.Module):
    def __init__(self, channels: int = 3, seed: int = 0):
        super().__init__()
        if channels not in (1, 3):
            raise ValueError(f"channels must be 1 or 3, got {channels}")
        gen = torch.Generator().manual_seed(seed)
        self.conv1 = nn.Conv2d(channels, 12, 5, padding=2)
        self.conv2 = nn.Conv2d(12, 12, 3, padding=1)
        self.head = nn.Conv2d(12, 3, 3, padding=1)
        for layer in (self.conv1, self.conv2, self.head):
            nn.init.kaiming_uniform_(layer.weight, a=5**0.5, generator=gen)
            nn.init.zeros_(layer.bias)
        with torch.no_grad():
            self.head.bias.copy_(torch.tensor([0.0, 0.0, 1.5]))
        self.double()
        self.eval()
        for p in self.parameters():
            p.requires_grad_(False)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        """Map a 1 x C x H x W image to 1 x 3 x H x W unit normals."""
        h = torch.tanh(self.conv1(x))
        h = torch.tanh(self.conv2(h))
        raw = self.head(h)
        return F.normalize(raw, dim=1, eps=1e-12)

    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.parameters())


class ModelSession:
    """Numpy-facing wrapper with channel-last tensors and autodiff products."""

    def __init__(self, height: int, width: int, channels: int = 3, seed: int = 0):
        self.height = height
        self.width = width
        self.channels = channels
        self.net = TinyNormalNet(channels=channels, seed=seed)

    def _to_torch(self, hwc: np.ndarray) -> torch.Tensor:
        arr = np.asarray(hwc, dtype=np.float64).reshape(self.height, self.width, self.channels)
        return torch.from_numpy(np.moveaxis(arr, -1, 0).copy()).unsqueeze(0)

    @staticmethod
    def _to_numpy(chw: torch.Tensor) -> np.ndarray:
        return np.moveaxis(chw.squeeze(0).numpy(), 0, -1)

    def forward(self, x: np.ndarray) -> np.ndarray:
        with torch.no_grad():
            return self._to_numpy(self.net(self._to_torch(x)))

    def vjp(self, x: np.ndarray, cotangent: np.ndarray) -> np.ndarray:
        xt = self._to_torch(x)
        cot = np.asarray(cotangent, dtype=np.float64).reshape(self.height, self.width, 3)
        ct = torch.from_numpy(np.moveaxis(cot, -1, 0).copy()).unsqueeze(0)
        _, pullback = torch.func.vjp(self.net, xt)
        (grad,) = pullback(ct)
        return self._to_numpy(grad)

    def jvp(self, x: np.ndarray, tangent: np.ndarray) -> np.ndarray:
        xt = self._to_torch(x)
        tt = self._to_torch(tangent)
        _, out = torch.func.jvp(self.net, (xt,), (tt,))
        return self._to_numpy(out)
