"""Portable float map (PFM) reader and writer.

Little-endian 32-bit floats (scale header -1.0), rows stored bottom to
top. Single-channel grids use the 'Pf' tag, 3-channel grids 'PF'. This is
the lossless on-disk format for every float map the CLI emits.
"""

from __future__ import annotations

import numpy as np


def write_pfm(path, img: np.ndarray) -> None:
    img = np.asarray(img)
    if img.ndim == 2:
        img = img[:, :, np.newaxis]
    if img.ndim != 3 or img.shape[2] not in (1, 3):
        raise ValueError(f"PFM supports HxW or HxWx{{1,3}} grids, got {img.shape}")
    tag = b"Pf" if img.shape[2] == 1 else b"PF"
    h, w = img.shape[:2]
    data = np.flipud(img).astype("<f4")
    with open(path, "wb") as f:
        f.write(tag + b"\n")
        f.write(f"{w} {h}\n".encode("ascii"))
        f.write(b"-1.0\n")
        f.write(data.tobytes())


def read_pfm(path) -> np.ndarray:
    """Read a PFM file as float64, shape H x W x 1 or H x W x 3."""
    with open(path, "rb") as f:
        tag = f.readline().strip()
        if tag == b"PF":
            channels = 3
        elif tag == b"Pf":
            channels = 1
        else:
            raise ValueError(f"{path}: not a PFM file (tag {tag!r})")
        dims = f.readline().split()
        if len(dims) != 2:
            raise ValueError(f"{path}: malformed PFM dimension line")
        w, h = int(dims[0]), int(dims[1])
        scale = float(f.readline())
        dtype = "<f4" if scale < 0 else ">f4"
        buf = f.read(w * h * channels * 4)
        if len(buf) != w * h * channels * 4:
            raise ValueError(f"{path}: truncated PFM payload")
    img = np.frombuffer(buf, dtype=dtype).reshape(h, w, channels)
    return np.flipud(img).astype(np.float64)
