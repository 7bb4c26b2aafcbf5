"""Image buffers, YCbCr decorrelation and Gaussian/Laplacian level stacks.

Luma images are plain 2-D ``float64`` arrays indexed ``[row, col]``. Level 0
of a stack is the finest; level ``k + 1`` has ``ceil(n / 2)`` samples per
axis and sample ``i`` sits over sample ``2 i`` of level ``k``.
"""
from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import ConfigError, DimensionError

# BT.601 full range, rows give Y, Cb, Cr.
YCBCR_MATRIX = np.array(
    [
        [0.299, 0.587, 0.114],
        [-0.168736, -0.331264, 0.5],
        [0.5, -0.418688, -0.081312],
    ]
)
_YCBCR_INVERSE = np.linalg.inv(YCBCR_MATRIX)

REDUCE_TAPS = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0
MIN_LEVEL_SIZE = 16


def as_luma(img) -> np.ndarray:
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"luma image must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError("luma image must be at least 1x1")
    return arr


@dataclass
class ChromaPair:
    cb: np.ndarray
    cr: np.ndarray

    def __post_init__(self):
        if self.cb.shape != self.cr.shape:
            raise DimensionError("cb and cr must share dimensions")

    @classmethod
    def neutral(cls, shape) -> "ChromaPair":
        return cls(np.zeros(shape), np.zeros(shape))

    def map(self, fn) -> "ChromaPair":
        return ChromaPair(fn(self.cb), fn(self.cr))


def to_luma_chroma(rgb) -> tuple[np.ndarray, ChromaPair]:
    """Split an ``(H, W, 3)`` raster, or a sequence of three channel planes,
    into BT.601 luma and zero-centred chroma."""
    if isinstance(rgb, (list, tuple)):
        if len(rgb) != 3:
            raise DimensionError("expected three channels")
        shapes = {np.shape(c) for c in rgb}
        if len(shapes) != 1:
            raise DimensionError(f"channel dimensions differ: {sorted(shapes)}")
        rgb = np.stack([np.asarray(c, dtype=np.float64) for c in rgb], axis=-1)
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise DimensionError(f"expected (H, W, 3) raster, got {rgb.shape}")
    ycc = rgb @ YCBCR_MATRIX.T
    return ycc[..., 0].copy(), ChromaPair(ycc[..., 1].copy(), ycc[..., 2].copy())


def from_luma_chroma(luma, chroma: ChromaPair) -> np.ndarray:
    luma = as_luma(luma)
    if luma.shape != chroma.cb.shape:
        raise DimensionError("luma and chroma dimensions differ")
    ycc = np.stack([luma, chroma.cb, chroma.cr], axis=-1)
    return ycc @ _YCBCR_INVERSE.T


def srgb_to_linear(v):
    v = np.asarray(v, dtype=np.float64)
    return np.where(v <= 0.04045, v / 12.92, ((np.maximum(v, 0) + 0.055) / 1.055) ** 2.4)


def linear_to_srgb(v):
    v = np.asarray(v, dtype=np.float64)
    return np.where(v <= 0.0031308, 12.92 * v, 1.055 * np.maximum(v, 0) ** (1 / 2.4) - 0.055)


# -- resampling ---------------------------------------------------------------

def reduce(img) -> np.ndarray:
    """Binomial 5-tap blur (mirror borders) followed by 2x decimation."""
    img = as_luma(img)
    blurred = ndimage.convolve1d(img, REDUCE_TAPS, axis=0, mode="mirror")
    blurred = ndimage.convolve1d(blurred, REDUCE_TAPS, axis=1, mode="mirror")
    return blurred[::2, ::2].copy()


def _mirror(i: np.ndarray, n: int) -> np.ndarray:
    if n == 1:
        return np.zeros_like(i)
    period = 2 * (n - 1)
    i = np.abs(i) % period
    return np.where(i > n - 1, period - i, i)


def _expand_axis(c: np.ndarray, n_fine: int, axis: int) -> np.ndarray:
    c = np.moveaxis(c, axis, 0)
    n = c.shape[0]
    i = np.arange(n)
    prev = c[_mirror(i - 1, n)]
    nxt = c[_mirror(i + 1, n)]
    out = np.empty((2 * n,) + c.shape[1:])
    out[0::2] = (prev + 6.0 * c + nxt) / 8.0
    out[1::2] = (c + nxt) / 2.0
    return np.moveaxis(out[:n_fine], 0, axis)


def _check_upsample_dims(src_shape, target_shape):
    for s, t in zip(src_shape, target_shape):
        if abs(t - 2 * s) > 1 or t < 1:
            raise DimensionError(f"cannot upsample {tuple(src_shape)} to {tuple(target_shape)}")


def expand(img, target_shape) -> np.ndarray:
    """Pyramid expand: zero-insertion upsampling filtered by the binomial kernel.

    Used for Laplacian bands and for bringing synthesized bands to full
    resolution; its images of the baseband are attenuated far more strongly
    than bilinear interpolation's.
    """
    img = as_luma(img)
    _check_upsample_dims(img.shape, target_shape)
    out = _expand_axis(img, target_shape[0], 0)
    return _expand_axis(out, target_shape[1], 1)


def bilinear_taps(n_src: int, n_dst: int):
    """Indices and weights for 1-D resampling of sample ``j`` at source
    coordinate ``j / 2`` (pyramid-aligned), clamped at the far edge."""
    pos = np.minimum(np.arange(n_dst) / 2.0, n_src - 1)
    i0 = np.floor(pos).astype(np.int64)
    i1 = np.minimum(i0 + 1, n_src - 1)
    t = pos - i0
    return i0, i1, t


def upsample_bilinear(src, target_shape) -> np.ndarray:
    """Bilinear 2x upsampling; fine sample ``j`` reads source coordinate ``j/2``.

    Works on any trailing dtype (real or complex) since each output is a
    convex combination of at most four source samples.
    """
    src = np.asarray(src)
    if src.ndim != 2:
        raise DimensionError(f"expected a 2-D map, got {src.shape}")
    _check_upsample_dims(src.shape, target_shape)
    y0, y1, ty = bilinear_taps(src.shape[0], target_shape[0])
    x0, x1, tx = bilinear_taps(src.shape[1], target_shape[1])
    rows = src[y0] * (1 - ty)[:, None] + src[y1] * ty[:, None]
    return rows[:, x0] * (1 - tx)[None, :] + rows[:, x1] * tx[None, :]


def upsample_to(src, shapes, upsampler=upsample_bilinear):
    """Apply ``upsampler`` repeatedly through the list of target shapes."""
    out = src
    for shp in shapes:
        out = upsampler(out, shp)
    return out


# -- level stacks -------------------------------------------------------------

def level_shapes(shape, depth: int) -> list[tuple[int, int]]:
    shapes = [tuple(int(s) for s in shape)]
    for _ in range(depth - 1):
        h, w = shapes[-1]
        shapes.append((math.ceil(h / 2), math.ceil(w / 2)))
    return shapes


def max_depth(shape, min_size: int = MIN_LEVEL_SIZE) -> int:
    depth = 0
    h, w = shape
    while h >= min_size and w >= min_size:
        depth += 1
        h, w = math.ceil(h / 2), math.ceil(w / 2)
    return depth


@dataclass
class LevelStack:
    gaussian: list[np.ndarray]
    laplacian: list[np.ndarray]
    reliable: list[bool] = field(default_factory=list)

    def __post_init__(self):
        if len(self.laplacian) != len(self.gaussian) - 1:
            raise DimensionError("need one Laplacian band per Gaussian level but the coarsest")
        if not self.reliable:
            self.reliable = [True] * len(self.gaussian)
        if len(self.reliable) != len(self.gaussian):
            raise DimensionError("reliability flags must cover every level")

    @property
    def depth(self) -> int:
        return len(self.gaussian)

    @property
    def shapes(self) -> list[tuple[int, int]]:
        return [g.shape for g in self.gaussian]

    def reliable_bands(self) -> list[int]:
        return [k for k in range(len(self.laplacian)) if self.reliable[k]]

    def collapse(self) -> np.ndarray:
        out = self.gaussian[-1]
        for k in range(len(self.laplacian) - 1, -1, -1):
            out = self.laplacian[k] + expand(out, self.laplacian[k].shape)
        return out


def _adjoint_reduce_1d(y):
    z = np.zeros(2 * len(y))
    z[::2] = y
    return np.convolve(z, REDUCE_TAPS, "same")


def _adjoint_expand_1d(f):
    return np.convolve(f, 2.0 * REDUCE_TAPS, "same")[::2]


def _band_rows(k: int):
    """1-D factors of the analysis rows of Laplacian band ``k``: each band
    sample is ``(u_p (x) u_q - v_p (x) v_q) . x`` for output parities p, q."""
    n = 64
    us, vs = [], []
    for p in (0, 1):
        d = np.zeros(n)
        d[n // 2 + p] = 1.0
        u = d
        for _ in range(k):
            u = _adjoint_reduce_1d(u)
        v = _adjoint_expand_1d(d)
        for _ in range(k + 1):
            v = _adjoint_reduce_1d(v)
        us.append(u)
        vs.append(v)
    return us, vs


@lru_cache(maxsize=None)
def band_noise_gain(k: int) -> float:
    """Mean-square of Laplacian band ``k`` for unit-variance white input
    (interior pixels, averaged over the four expand parity classes)."""
    us, vs = _band_rows(k)
    tot = 0.0
    for p in (0, 1):
        for q in (0, 1):
            tot += ((us[p] @ us[p]) * (us[q] @ us[q]) + (vs[p] @ vs[p]) * (vs[q] @ vs[q])
                    - 2.0 * (us[p] @ vs[p]) * (us[q] @ vs[q]))
    return float(tot / 4.0)


@lru_cache(maxsize=None)
def band_power_transfer(k: int, n: int = 160):
    """Power transfer ``T_k(f)`` of band ``k`` on an ``n x n`` midpoint grid
    covering where the band lives; returns ``(T * dA, log|f|)``."""
    us, vs = _band_rows(k)
    j = np.arange(len(us[0])) - len(us[0]) // 2
    fmax = min(0.5, 3.0 / 2**k)
    df = 2 * fmax / n
    f = -fmax + df * (np.arange(n) + 0.5)
    e = np.exp(-2j * np.pi * np.outer(f, j))
    U = [e @ u for u in us]
    V = [e @ v for v in vs]
    T = np.zeros((n, n))
    for p in (0, 1):
        for q in (0, 1):
            T += np.abs(np.outer(U[p], U[q]) - np.outer(V[p], V[q])) ** 2
    T *= df * df / 4.0
    return T, 0.5 * np.log(f[:, None] ** 2 + f[None, :] ** 2)


def band_power(k: int, exponent: float) -> float:
    """Mean-square of band ``k`` for a stationary input with power spectrum
    ``|f|^-exponent`` (cycles/pixel)."""
    T, logf = band_power_transfer(k)
    return float(np.sum(T * np.exp(-exponent * logf)))


def _check_depth(shape, depth: int) -> None:
    if depth < 2:
        raise ConfigError(f"depth must be >= 2, got {depth}")
    limit = max_depth(shape)
    if depth > limit:
        raise ConfigError(
            f"depth {depth} too large for {shape[1]}x{shape[0]}: coarsest level would be below "
            f"{MIN_LEVEL_SIZE}x{MIN_LEVEL_SIZE} (max depth {limit})"
        )


def stack_from_gaussian(gaussian: list[np.ndarray], reliable=None) -> LevelStack:
    laplacian = [gaussian[k] - expand(gaussian[k + 1], gaussian[k].shape) for k in range(len(gaussian) - 1)]
    return LevelStack(gaussian, laplacian, list(reliable) if reliable is not None else [])


def build_level_stack(luma, depth: int, reliable=None) -> LevelStack:
    luma = as_luma(luma)
    _check_depth(luma.shape, depth)
    gaussian = [luma]
    for _ in range(depth - 1):
        gaussian.append(reduce(gaussian[-1]))
    return stack_from_gaussian(gaussian, reliable)
