"""Raster I/O via OpenCV (PNG, PPM/PGM) with 8/16-bit handling."""
from __future__ import annotations

from pathlib import Path

import cv2
import numpy as np

from .errors import InputError
from .image import linear_to_srgb, srgb_to_linear

SUPPORTED = (".png", ".ppm", ".pgm", ".pnm")


def read_image(path, linearize: bool = False) -> np.ndarray:
    """Return a float RGB raster in [0, 1] of shape (H, W, 3)."""
    p = Path(path)
    if p.suffix.lower() not in SUPPORTED:
        raise InputError(f"unsupported image format {p.suffix!r}; use one of {SUPPORTED}")
    if not p.is_file():
        raise InputError(f"no such image: {p}")
    raw = cv2.imread(str(p), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise InputError(f"could not decode {p}")
    if raw.dtype == np.uint8:
        img = raw.astype(np.float64) / 255.0
    elif raw.dtype == np.uint16:
        img = raw.astype(np.float64) / 65535.0
    else:
        raise InputError(f"unsupported sample type {raw.dtype} in {p}")
    if img.ndim == 2:
        img = np.repeat(img[..., None], 3, axis=2)
    elif img.shape[2] == 4:
        img = img[..., 2::-1]
    elif img.shape[2] == 3:
        img = img[..., ::-1]
    else:
        raise InputError(f"unsupported channel count {img.shape[2]} in {p}")
    img = np.ascontiguousarray(img)
    return srgb_to_linear(img) if linearize else img


def encode(rgb, bit_depth: int = 8, linearized: bool = False) -> np.ndarray:
    """Clamp to [0, 1] and quantize; returns a BGR integer array for OpenCV."""
    rgb = np.asarray(rgb, dtype=np.float64)
    if linearized:
        rgb = linear_to_srgb(np.clip(rgb, 0.0, 1.0))
    rgb = np.clip(rgb, 0.0, 1.0)
    if bit_depth == 8:
        q = np.round(rgb * 255.0).astype(np.uint8)
    elif bit_depth == 16:
        q = np.round(rgb * 65535.0).astype(np.uint16)
    else:
        raise InputError(f"bit depth must be 8 or 16, got {bit_depth}")
    return q[..., ::-1] if q.ndim == 3 else q


def write_image(path, rgb, bit_depth: int = 8, linearized: bool = False) -> Path:
    p = Path(path)
    if p.suffix.lower() not in SUPPORTED:
        raise InputError(f"unsupported output format {p.suffix!r}")
    p.parent.mkdir(parents=True, exist_ok=True)
    if not cv2.imwrite(str(p), encode(rgb, bit_depth, linearized)):
        raise InputError(f"could not write {p}")
    return p


def write_luma(path, luma, bit_depth: int = 8) -> Path:
    luma = np.asarray(luma, dtype=np.float64)
    return write_image(path, np.repeat(luma[..., None], 3, axis=2), bit_depth)


def normalize_for_display(m) -> np.ndarray:
    """Map an arbitrary real field to [0, 1] for PNG dumps."""
    m = np.asarray(m, dtype=np.float64)
    lo, hi = float(np.min(m)), float(np.max(m))
    if hi <= lo:
        return np.zeros_like(m)
    return (m - lo) / (hi - lo)
