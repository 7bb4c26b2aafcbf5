"""Reference NumPy/SciPy implementations of the hot loops.

Semantics match ``_ckernels`` exactly; the compiled module is preferred when
it imports.
"""
from __future__ import annotations

import numpy as np
from scipy import ndimage

NAME = "python"

# Footprint offsets ordered by Chebyshev distance so that the nearest impulse
# claims a pixel first when footprints overlap.
_OFFSETS = sorted(
    ((dy, dx) for dy in range(-4, 5) for dx in range(-4, 5)),
    key=lambda o: (max(abs(o[0]), abs(o[1])), o[0], o[1]),
)
OFFSETS = np.asarray(_OFFSETS, dtype=np.int64)


def convolve_axis(src: np.ndarray, taps: np.ndarray, axis: int) -> np.ndarray:
    """Convolve along one axis with mirror (reflect-without-repeat) borders."""
    return ndimage.convolve1d(np.asarray(src, dtype=np.float64), np.asarray(taps, dtype=np.float64),
                              axis=axis, mode="mirror")


def build_submaps(ys, xs, groups, n_groups, shape, kernels):
    """Stamp 9x9 basis kernels for every impulse into per-group maps.

    Returns ``(P, owner)`` with ``P`` of shape (S, H, W, 7) float32 and
    ``owner`` (S, H, W) int32 holding the impulse index whose footprint covers
    the pixel (-1 where none does).
    """
    h, w = shape
    ys = np.asarray(ys, dtype=np.int64)
    xs = np.asarray(xs, dtype=np.int64)
    groups = np.asarray(groups, dtype=np.int64)
    kern = np.asarray(kernels, dtype=np.float64)
    P = np.zeros((n_groups, h, w, 7), dtype=np.float32)
    owner = np.full((n_groups, h, w), -1, dtype=np.int32)
    idx = np.arange(ys.size, dtype=np.int32)
    for dy, dx in _OFFSETS:
        yy = ys + dy
        xx = xs + dx
        m = (yy >= 0) & (yy < h) & (xx >= 0) & (xx < w)
        g, y, x = groups[m], yy[m], xx[m]
        # float32 accumulation of float64 taps, same rounding as the C loop
        P[g, y, x] = (P[g, y, x].astype(np.float64) + kern[:, dy + 4, dx + 4]).astype(np.float32)
        free = owner[g, y, x] < 0
        owner[g[free], y[free], x[free]] = idx[m][free]
    return P, owner


def combine_submaps(P, owner, weights, out=None):
    """Runtime pass: per group, weight the 7 stored maps by the owning
    impulse's coefficients and accumulate."""
    n_groups, h, w, _ = P.shape
    wext = np.vstack([np.asarray(weights, dtype=np.float64), np.zeros((1, 7))])
    if out is None:
        out = np.zeros((h, w), dtype=np.float64)
    for g in range(n_groups):
        wg = wext[owner[g]]
        out += np.einsum("hwb,hwb->hw", P[g], wg)
    return out
