"""Eccentricity-dependent level selection, the foveated base image and the
final composition of base plus synthesized bands."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError
from .image import (ChromaPair, LevelStack, as_luma, expand, from_luma_chroma, level_shapes,
                    reduce, stack_from_gaussian, upsample_to)

GRADES = ("foveated", "intensity_adjusted", "oriented", "phase_aligned")
# foveal masking radii (degrees) used for stimulus layouts; not enforced
FOVEAL_RADIUS_PRESETS = {"small": 8.0, "medium": 16.0, "large": 24.0}


class ClampWarning(UserWarning):
    """Requested blur exceeded the coarsest usable level."""


@dataclass
class FoveationModel:
    """Gaze and viewing geometry plus a linear tolerable-blur model.

    ``threshold_slope`` / ``threshold_intercept`` map eccentricity in degrees
    to a tolerable Gaussian blur in full-resolution pixels.  The defaults are
    placeholders chosen for demos, not measured values.
    """

    gaze: tuple = (0.0, 0.0)
    pixels_per_degree: float = 80.0
    threshold_slope: float = 0.02
    threshold_intercept: float = 0.0
    grade: str = "phase_aligned"
    eye: tuple | None = None          # screen point the eye sits in front of; defaults to gaze
    foveal_radius: float | None = None

    def __post_init__(self):
        if not self.pixels_per_degree > 0 or not math.isfinite(self.pixels_per_degree):
            raise ConfigError("pixels_per_degree must be positive")
        if self.threshold_slope < 0 or not math.isfinite(self.threshold_slope):
            raise ConfigError("threshold slope must be finite and >= 0 (monotone in eccentricity)")
        if not math.isfinite(self.threshold_intercept):
            raise ConfigError("threshold intercept must be finite")
        if self.grade not in GRADES:
            raise ConfigError(f"unknown grade {self.grade!r}; choose from {GRADES}")
        if isinstance(self.foveal_radius, str):
            if self.foveal_radius not in FOVEAL_RADIUS_PRESETS:
                raise ConfigError(f"foveal radius preset must be one of {sorted(FOVEAL_RADIUS_PRESETS)}")
            self.foveal_radius = FOVEAL_RADIUS_PRESETS[self.foveal_radius]

    @property
    def viewing_distance(self) -> float:
        """Eye-to-screen distance in pixels: one degree spans
        ``pixels_per_degree`` pixels straight ahead."""
        return self.pixels_per_degree / math.tan(math.radians(1.0))

    def threshold(self, ecc) -> np.ndarray:
        return np.maximum(self.threshold_slope * np.asarray(ecc, dtype=np.float64)
                          + self.threshold_intercept, 0.0)


def eccentricity_of(px, py, model: FoveationModel) -> np.ndarray:
    """Visual angle in degrees between the gaze point and pixel ``(px, py)``
    for a flat screen viewed from ``model.viewing_distance``."""
    ex, ey = model.eye if model.eye is not None else model.gaze
    d = model.viewing_distance
    gx, gy = model.gaze[0] - ex, model.gaze[1] - ey
    vx = np.asarray(px, dtype=np.float64) - ex
    vy = np.asarray(py, dtype=np.float64) - ey
    dot = gx * vx + gy * vy + d * d
    cx = gy * d - d * vy
    cy = d * vx - gx * d
    cz = gx * vy - gy * vx
    return np.degrees(np.arctan2(np.sqrt(cx * cx + cy * cy + cz * cz), dot))


def eccentricity_map(shape, model: FoveationModel) -> np.ndarray:
    yy, xx = np.mgrid[0:shape[0], 0:shape[1]]
    return eccentricity_of(xx, yy, model)


def level_blur(k) -> np.ndarray:
    """Std of the accumulated binomial blur of Gaussian level ``k`` in
    full-resolution pixels (the 5-tap binomial has unit variance)."""
    return np.sqrt((4.0 ** np.asarray(k, dtype=np.float64) - 1.0) / 3.0)


def levels_for_threshold(thr, max_level: int) -> np.ndarray:
    """Largest ``k`` with ``level_blur(k) <= thr``, unclamped above."""
    thr = np.asarray(thr, dtype=np.float64)
    # blur_k <= t  <=>  k <= log4(3 t^2 + 1)
    k = np.floor(np.log(3.0 * thr * thr + 1.0) / np.log(4.0) + 1e-12).astype(np.int64)
    return np.maximum(k, 0)


@dataclass
class ReliabilityMap:
    levels: np.ndarray            # (H, W) finest reliable level per pixel
    max_level: int
    clamped: bool = False

    @property
    def shape(self):
        return self.levels.shape

    def distinct(self) -> list[int]:
        return [int(v) for v in np.unique(self.levels)]

    def at_level(self, level: int) -> np.ndarray:
        """Reliability sampled on level ``level``'s grid (pixel ``i`` sits at
        full-resolution ``i * 2^level``)."""
        s = 2 ** int(level)
        return self.levels[::s, ::s]


def reliability_map(shape, model: FoveationModel, max_level: int) -> ReliabilityMap:
    if max_level < 0:
        raise ConfigError(f"max_level must be >= 0, got {max_level}")
    ecc = eccentricity_map(shape, model)
    lv = levels_for_threshold(model.threshold(ecc), max_level)
    if model.foveal_radius is not None:
        lv = np.where(ecc <= model.foveal_radius, 0, lv)
    clamped = bool(np.any(lv > max_level))
    if clamped:
        warnings.warn(f"tolerable blur exceeds level {max_level} in places; clamped", ClampWarning,
                      stacklevel=3)
    return ReliabilityMap(np.minimum(lv, max_level).astype(np.int64), int(max_level), clamped)


def _level_images(luma, n_levels: int) -> list[np.ndarray]:
    """Gaussian level ``k`` brought to full resolution by ``k`` bilinear steps."""
    shapes = level_shapes(luma.shape, n_levels)
    g = [luma]
    for _ in range(n_levels - 1):
        g.append(reduce(g[-1]))
    return [upsample_to(g[k], shapes[k - 1::-1]) if k else g[0] for k in range(n_levels)]


def foveate_with(luma, reliability: ReliabilityMap) -> np.ndarray:
    luma = as_luma(luma)
    if luma.shape != reliability.shape:
        raise DimensionError(f"image {luma.shape} vs reliability {reliability.shape}")
    need = max(reliability.distinct()) + 1
    ups = _level_images(luma, need)
    base = np.zeros_like(luma)
    for k in range(need):
        sel = reliability.levels == k
        base[sel] = ups[k][sel]
    return base


def foveate(luma, model: FoveationModel, max_level: int, chroma: ChromaPair | None = None):
    """Return ``(base, reliability)`` or ``(base, reliability, chroma_base)``
    when chroma is given (chroma is foveated with the same map)."""
    luma = as_luma(luma)
    rel = reliability_map(luma.shape, model, max_level)
    base = foveate_with(luma, rel)
    if chroma is None:
        return base, rel
    return base, rel, chroma.map(lambda c: foveate_with(c, rel))


def stack_from_foveated(base, level: int, depth: int) -> LevelStack:
    """Level stack of ``base`` for the region whose finest reliable level is
    ``level``.

    There the base is ``level`` bilinear upsamplings of Gaussian level
    ``level``, so taking every ``2^level``-th sample recovers that level
    exactly, without the extra blur a reduce would add.  Finer levels are
    subsampled likewise and marked unreliable.
    """
    base = as_luma(base)
    lv = int(level)
    if not 0 <= lv < depth:
        raise ConfigError(f"level {lv} outside stack depth {depth}")
    shapes = level_shapes(base.shape, depth)
    if min(shapes[-1]) < 1:
        raise ConfigError("depth too large for image")
    gaussian = [base[:: 2**k, :: 2**k].copy() for k in range(lv + 1)]
    for _ in range(lv + 1, depth):
        gaussian.append(reduce(gaussian[-1]))
    return stack_from_gaussian(gaussian, [k >= lv for k in range(depth)])


def band_to_full(band, level: int, full_shape) -> np.ndarray:
    """Pyramid-expand a level-``level`` band to full resolution."""
    shapes = level_shapes(full_shape, level + 1)
    out = np.asarray(band, dtype=np.float64)
    if out.shape != shapes[level]:
        raise DimensionError(f"band {out.shape} is not level {level} of {tuple(full_shape)}")
    for k in range(level - 1, -1, -1):
        out = expand(out, shapes[k])
    return out


def compose_luma(base, bands_full: dict, reliability: ReliabilityMap) -> np.ndarray:
    base = as_luma(base)
    if base.shape != reliability.shape:
        raise DimensionError(f"base {base.shape} vs reliability {reliability.shape}")
    out = base.copy()
    for lvl in sorted(bands_full):
        b = np.asarray(bands_full[lvl], dtype=np.float64)
        if b.shape != base.shape:
            raise DimensionError(f"band for level {lvl} has shape {b.shape}, expected {base.shape}")
        sel = reliability.levels > lvl
        out[sel] = out[sel] + b[sel]
    return out


def compose_enhanced(base, bands_full: dict, reliability: ReliabilityMap,
                     chroma: ChromaPair | None = None) -> np.ndarray:
    """RGB raster of ``base + masked bands`` with chroma carried through.
    No clamping here; encoding clamps."""
    luma = compose_luma(base, bands_full, reliability)
    if chroma is None:
        chroma = ChromaPair.neutral(luma.shape)
    return from_luma_chroma(luma, chroma)
