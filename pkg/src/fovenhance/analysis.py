"""Per-pixel dominant orientation, local phase and quadrature magnitude."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .filterbank import KERNELS, BasisKernels, QuadratureResponses, basis_responses, steer_g, steer_h

MAGNITUDE_FLOOR = 1e-4   # relative to the level's maximum magnitude
ISOTROPY_FLOOR = 1e-3    # |(C2, C3)| / C1 below this: orientation undefined
ABSOLUTE_FLOOR = 1e-9    # intensities live in [0, 1]; rounding noise of flat areas sits far below


def wrap_angle(a):
    """Wrap to (-pi, pi]."""
    w = np.pi - np.mod(np.pi - np.asarray(a, dtype=np.float64), 2 * np.pi)
    # mod can round a tiny negative remainder up to exactly 2pi
    return np.where(w <= -np.pi, w + 2 * np.pi, w)


def fold_orientation(theta):
    """Fold to [0, pi)."""
    t = np.mod(np.asarray(theta, dtype=np.float64), np.pi)
    return np.where(t >= np.pi, t - np.pi, t)


@dataclass
class ParameterFields:
    theta: np.ndarray
    phi: np.ndarray
    sigma: np.ndarray
    valid: np.ndarray
    level: int = 0

    @property
    def shape(self):
        return self.theta.shape


def orientation_coefficients(r: QuadratureResponses):
    """Fourier coefficients ``(C1, C2, C3)`` of E(theta) at harmonics 0 and 2.

    Numbers follow the usual G2/H2 steering tables; C3 changes
    sign because angles here turn towards +y.
    """
    ga, gb, gc, ha, hb, hc, hd = r.maps()
    c1 = (0.5 * gb**2 + 0.25 * ga * gc + 0.375 * (ga**2 + gc**2) + 0.3125 * (ha**2 + hd**2)
          + 0.5625 * (hb**2 + hc**2) + 0.375 * (ha * hc + hb * hd))
    c2 = (0.5 * (ga**2 - gc**2) + 0.46875 * (ha**2 - hd**2) + 0.28125 * (hb**2 - hc**2)
          + 0.1875 * (ha * hc - hb * hd))
    c3 = (ga * gb + gb * gc + 0.9375 * (hc * hd + ha * hb) + 1.6875 * hb * hc
          + 0.1875 * ha * hd)
    return c1, c2, c3


def dominant_orientation(responses: QuadratureResponses) -> np.ndarray:
    _, c2, c3 = orientation_coefficients(responses)
    return fold_orientation(0.5 * np.arctan2(c3, c2))


def orientation_strength(responses: QuadratureResponses) -> np.ndarray:
    c1, c2, c3 = orientation_coefficients(responses)
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.hypot(c2, c3) / c1
    return np.where(c1 > 0, s, 0.0)


def local_phase(g_steered, h_steered) -> np.ndarray:
    g = np.asarray(g_steered, dtype=np.float64)
    h = np.asarray(h_steered, dtype=np.float64)
    if g.shape != h.shape:
        raise DimensionError("steered maps differ in shape")
    return wrap_angle(np.arctan2(h, g))


def quadrature_magnitude(g_steered, h_steered) -> np.ndarray:
    g = np.asarray(g_steered, dtype=np.float64)
    h = np.asarray(h_steered, dtype=np.float64)
    if g.shape != h.shape:
        raise DimensionError("steered maps differ in shape")
    return np.hypot(g, h)


def steered_complex(responses: QuadratureResponses, theta) -> np.ndarray:
    """The complex pair ``G_theta + i H_theta``."""
    return steer_g(responses, theta) + 1j * steer_h(responses, theta)


def magnitude_mask(magnitude, floor: float = MAGNITUDE_FLOOR,
                   absolute: float = ABSOLUTE_FLOOR) -> np.ndarray:
    peak = float(np.max(magnitude)) if magnitude.size else 0.0
    if peak <= absolute:
        return np.zeros(magnitude.shape, dtype=bool)
    return magnitude >= max(floor * peak, absolute)


def fields_from_responses(responses: QuadratureResponses, level: int = 0) -> tuple[ParameterFields, np.ndarray]:
    theta = dominant_orientation(responses)
    z = steered_complex(responses, theta)
    mag = np.abs(z)
    valid = magnitude_mask(mag) & (orientation_strength(responses) >= ISOTROPY_FLOOR)
    fields = ParameterFields(theta, local_phase(z.real, z.imag), mag, valid, level)
    return fields, z


def analyze_level(level, kernels: BasisKernels = KERNELS, level_index: int = 0) -> ParameterFields:
    """Orientation, phase and raw quadrature magnitude of one pyramid level."""
    fields, _ = fields_from_responses(basis_responses(level, kernels), level_index)
    return fields
