"""Steerable G2/H2 quadrature basis: taps, separable filtering and steering.

Orientation convention: ``theta`` is the direction of the second derivative
in ``(x = column, y = row)`` coordinates, so ``theta = 0`` responds maximally
to structure varying along x (a vertical grating) and positive angles turn
from +x towards +y (down the image). Steering weights are

    G(theta) = c^2 Ga + 2cs Gb + s^2 Gc
    H(theta) = c^3 Ha + 3c^2 s Hb + 3c s^2 Hc + s^3 Hd

The even family is sign-flipped relative to the textbook second derivative so
that a bright line on a dark ground gives a positive even response (phase 0).
"""
from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from . import _backend, instrument
from .errors import DimensionError

SAMPLE_SPACING = 0.67
TAPS = 9
BASIS_NAMES = ("ga", "gb", "gc", "ha", "hb", "hc", "hd")

_x = np.arange(-(TAPS // 2), TAPS // 2 + 1) * SAMPLE_SPACING
_gauss = np.exp(-_x**2)
_even2 = -0.9213 * (2 * _x**2 - 1) * _gauss
# the sampled table misses zero DC by ~5e-4; re-centre to zero mean
_even2 = _even2 - _even2.mean()
_odd1 = _x * _gauss
_odd3 = 0.9780 * (_x**3 - 2.254 * _x) * _gauss
_even_h = 0.9780 * (_x**2 - 0.7515) * _gauss


@dataclass(frozen=True)
class BasisKernels:
    """Each kernel is ``outer(vertical, horizontal)``: ``(col_taps, row_taps)``."""

    g_taps: tuple
    h_taps: tuple
    nominal_band: float = 0.25

    def separable(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return list(self.g_taps) + list(self.h_taps)

    def dense(self) -> np.ndarray:
        """All seven kernels as a (7, 9, 9) array indexed ``[k, row, col]``."""
        return np.stack([np.outer(v, h) for v, h in self.separable()])


def default_kernels() -> BasisKernels:
    g = (
        (_gauss, _even2),               # Ga: variation along x
        (-1.843 * _odd1, _odd1),        # Gb
        (_even2, _gauss),               # Gc: variation along y
    )
    h = (
        (_gauss, _odd3),                # Ha
        (_odd1, _even_h),               # Hb: (x^2 - 0.7515) y
        (_even_h, _odd1),               # Hc: (y^2 - 0.7515) x
        (_odd3, _gauss),                # Hd
    )
    return BasisKernels(g, h)


KERNELS = default_kernels()


@dataclass
class QuadratureResponses:
    ga: np.ndarray
    gb: np.ndarray
    gc: np.ndarray
    ha: np.ndarray
    hb: np.ndarray
    hc: np.ndarray
    hd: np.ndarray

    def __post_init__(self):
        shapes = {m.shape for m in self.maps()}
        if len(shapes) != 1:
            raise DimensionError(f"response maps differ in shape: {shapes}")

    @property
    def shape(self):
        return self.ga.shape

    def maps(self) -> list[np.ndarray]:
        return [getattr(self, f.name) for f in fields(self)]

    def map(self, fn) -> "QuadratureResponses":
        return QuadratureResponses(*(fn(m) for m in self.maps()))


def basis_responses(level, kernels: BasisKernels = KERNELS) -> QuadratureResponses:
    """Convolve ``level`` with the seven basis kernels; two 1x9 passes each."""
    level = np.asarray(level, dtype=np.float64)
    if level.ndim != 2 or min(level.shape) < TAPS:
        raise DimensionError(f"level must be at least {TAPS}x{TAPS}, got {level.shape}")
    k = _backend.active()
    out = []
    for vert, horiz in kernels.separable():
        tmp = k.convolve_axis(level, horiz, 1)
        out.append(k.convolve_axis(tmp, vert, 0))
    instrument.count("conv1d_1x9", 2 * len(out))
    return QuadratureResponses(*out)


def g_weights(theta):
    c, s = np.cos(theta), np.sin(theta)
    return c * c, 2 * c * s, s * s


def h_weights(theta):
    c, s = np.cos(theta), np.sin(theta)
    return c**3, 3 * c * c * s, 3 * c * s * s, s**3


def steer_g(responses: QuadratureResponses, theta):
    wa, wb, wc = g_weights(theta)
    return wa * responses.ga + wb * responses.gb + wc * responses.gc


def steer_h(responses: QuadratureResponses, theta):
    wa, wb, wc, wd = h_weights(theta)
    return wa * responses.ha + wb * responses.hb + wc * responses.hc + wd * responses.hd


def steered_kernels(theta: float, kernels: BasisKernels = KERNELS) -> tuple[np.ndarray, np.ndarray]:
    """Dense 9x9 ``(G_theta, H_theta)`` taps."""
    d = kernels.dense()
    g = np.tensordot(np.array(g_weights(theta)), d[:3], axes=1)
    h = np.tensordot(np.array(h_weights(theta)), d[3:], axes=1)
    return g, h


def oriented_energy(responses: QuadratureResponses, theta):
    g = steer_g(responses, theta)
    h = steer_h(responses, theta)
    return g * g + h * h


def frequency_response(kernels: BasisKernels = KERNELS, n: int = 64):
    """Magnitude of each kernel's DFT on an ``n x n`` grid, frequencies in
    cycles/pixel ordered from -0.5 upward."""
    d = kernels.dense()
    freqs = np.fft.fftshift(np.fft.fftfreq(n))
    mags = np.abs(np.fft.fftshift(np.fft.fft2(d, s=(n, n)), axes=(-2, -1)))
    return freqs, mags
