"""Carry orientation, phase and intensity from the finest reliable level to
the missing finer levels, and fit the band-power slope used for gains."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .analysis import (ParameterFields, fields_from_responses, fold_orientation, magnitude_mask,
                       steered_complex, wrap_angle)
from .errors import ConfigError, DegenerateSpectrumError, DimensionError
from .filterbank import KERNELS, basis_responses
from .image import LevelStack, band_noise_gain, band_power, bilinear_taps, upsample_bilinear

ORIENTATION_CONFIDENCE = 1e-3


@dataclass
class SlopeFit:
    """Power-law fit of the reliable bands' mean-squares.

    ``slope`` is the spectral exponent ``s`` of ``S(f) = 2^intercept |f|^-s``.
    With ``method="model"`` each band's mean-square is modelled through its
    exact power transfer, ``ms_k = 2^intercept * band_power(k, s)``, and
    ``(s, intercept)`` minimise the squared log2 residuals.  ``method="line"``
    fits a straight line through ``log2(ms_k / white-noise gain_k)`` against
    ``k``; it agrees for coarse bands but is biased by the two finest ones.
    """

    slope: float
    intercept: float
    levels_used: int
    reference_level: int
    method: str = "model"
    band_mean_square: dict[int, float] = field(default_factory=dict)
    gains: dict[int, float] = field(default_factory=dict)
    target_std: dict[int, float] = field(default_factory=dict)

    def predicted_mean_square(self, level: int) -> float:
        if self.method == "line":
            return float(band_noise_gain(level) * 2.0 ** (self.intercept + self.slope * level))
        return float(2.0 ** self.intercept * band_power(level, self.slope))

    def predicted_std(self, level: int) -> float:
        return float(np.sqrt(self.predicted_mean_square(level)))

    def gain(self, level: int, reference: int | None = None) -> float:
        """Amplitude-density ratio between ``level`` and ``reference``."""
        ref = self.reference_level if reference is None else reference
        return float(2.0 ** (-0.5 * self.slope * (ref - level)))

    def to_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "levels_used": self.levels_used,
            "reference_level": self.reference_level,
            "method": self.method,
            "band_mean_square": {str(k): v for k, v in self.band_mean_square.items()},
            "gains": {str(k): v for k, v in self.gains.items()},
            "target_std": {str(k): v for k, v in self.target_std.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SlopeFit":
        ints = lambda m: {int(k): float(v) for k, v in m.items()}  # noqa: E731
        return cls(float(d["slope"]), float(d["intercept"]), int(d["levels_used"]),
                   int(d["reference_level"]), d.get("method", "model"), ints(d["band_mean_square"]),
                   ints(d["gains"]), ints(d["target_std"]))


SLOPE_BOUNDS = (-4.0, 8.0)


def _fit_power_law(ks, ms):
    y = np.log2(ms)

    def cost(s):
        lm = np.log2([band_power(int(k), s) for k in ks])
        return float(np.sum((y - lm - np.mean(y - lm)) ** 2))

    res = optimize.minimize_scalar(cost, bounds=SLOPE_BOUNDS, method="bounded",
                                   options={"xatol": 1e-7})
    s = float(res.x)
    lm = np.log2([band_power(int(k), s) for k in ks])
    return s, float(np.mean(y - lm))


def estimate_spectrum_slope(stack: LevelStack, method: str = "model") -> SlopeFit:
    bands = stack.reliable_bands()
    if len(bands) < 2:
        raise ConfigError(f"slope fit needs >= 2 reliable bands, stack has {len(bands)}")
    scale = max(1.0, float(np.mean(stack.gaussian[-1] ** 2)))
    ms = {k: float(np.mean(stack.laplacian[k] ** 2)) for k in bands}
    used = {k: v for k, v in ms.items() if v > 1e-20 * scale}
    if len(used) < 2:
        raise DegenerateSpectrumError("fewer than two reliable bands carry variance")
    ks = np.array(sorted(used), dtype=np.float64)
    vals = np.array([used[int(k)] for k in ks])
    if method == "model":
        slope, intercept = _fit_power_law(ks, vals)
    elif method == "line":
        y = np.log2(vals / np.array([band_noise_gain(int(k)) for k in ks]))
        slope, intercept = np.polyfit(ks, y, 1)
    else:
        raise ConfigError(f"unknown slope-fit method {method!r}")
    ref = int(min(bands))
    fit = SlopeFit(float(slope), float(intercept), len(used), ref, method, ms)
    for lvl in range(ref):
        fit.gains[lvl] = fit.gain(lvl)
        fit.target_std[lvl] = fit.predicted_std(lvl)
    return fit


# -- per-parameter upsampling --------------------------------------------------

def upsample_orientation(theta_coarse, target_shape) -> tuple[np.ndarray, np.ndarray]:
    """Interpolate orientation via the doubled angle ``exp(2i theta)``.

    Returns the fine orientation and ``|z|`` of the interpolated unit phasor;
    values near zero mark pixels where neighbours disagreed by ~90 degrees.
    """
    z = np.exp(2j * np.asarray(theta_coarse, dtype=np.float64))
    zf = upsample_bilinear(z, target_shape)
    return fold_orientation(0.5 * np.angle(zf)), np.abs(zf)


def upsample_oriented_complex(z, theta_src, theta_dst) -> np.ndarray:
    """Bilinear upsampling of a steered complex response.

    The pair ``(theta, z)`` describes the same signal as ``(theta + pi,
    conj z)``; neighbours whose orientation representative lies more than 90
    degrees from the target's are conjugated before blending.
    """
    z = np.asarray(z)
    theta_src = np.asarray(theta_src)
    shp = theta_dst.shape
    y0, y1, ty = bilinear_taps(z.shape[0], shp[0])
    x0, x1, tx = bilinear_taps(z.shape[1], shp[1])
    out = np.zeros(shp, dtype=np.complex128)
    for yi, wy in ((y0, 1 - ty), (y1, ty)):
        for xi, wx in ((x0, 1 - tx), (x1, tx)):
            zs = z[np.ix_(yi, xi)]
            flip = np.cos(theta_src[np.ix_(yi, xi)] - theta_dst) < 0
            out += np.where(flip, np.conj(zs), zs) * (wy[:, None] * wx[None, :])
    return out


def upsample_valid(valid, target_shape) -> np.ndarray:
    """A fine pixel stays valid only if every source sample it reads is."""
    valid = np.asarray(valid, dtype=bool)
    y0, y1, ty = bilinear_taps(valid.shape[0], target_shape[0])
    x0, x1, tx = bilinear_taps(valid.shape[1], target_shape[1])
    out = np.ones(target_shape, dtype=bool)
    for yi, wy in ((y0, 1 - ty), (y1, ty)):
        for xi, wx in ((x0, 1 - tx), (x1, tx)):
            used = (wy[:, None] * wx[None, :]) > 0
            out &= ~used | valid[np.ix_(yi, xi)]
    return out


def relative_phase(m, c) -> tuple[np.ndarray, np.ndarray]:
    """``Phi = (c^2 / |c|) * conj(m)``; ``c`` must already be on m's grid.

    Returns ``(Phi, valid)``; pixels with ``|c| = 0`` get ``Phi = 0`` and are
    flagged invalid.
    """
    m = np.asarray(m, dtype=np.complex128)
    c = np.asarray(c, dtype=np.complex128)
    if m.shape != c.shape:
        raise DimensionError(f"relative_phase: {m.shape} vs {c.shape}; upsample c first")
    mag = np.abs(c)
    ok = mag > 0
    c_hat = np.zeros_like(c)
    c_hat[ok] = c[ok] ** 2 / mag[ok]
    return c_hat * np.conj(m), ok & (np.abs(m) > 0)


def extrapolate_phase(m, phi_rel) -> tuple[np.ndarray, np.ndarray]:
    """``arg f = 2 arg m - arg Phi`` wrapped to (-pi, pi], with validity."""
    m = np.asarray(m, dtype=np.complex128)
    phi_rel = np.asarray(phi_rel, dtype=np.complex128)
    if m.shape != phi_rel.shape:
        raise DimensionError("m and Phi must share dimensions")
    ok = (np.abs(m) > 0) & (np.abs(phi_rel) > 0)
    arg_f = np.where(ok, wrap_angle(2.0 * np.angle(m) - np.angle(phi_rel)), 0.0)
    return arg_f, ok


def extrapolate_intensity(magnitude_coarse, gain: float, target_shape) -> np.ndarray:
    if not gain > 0 or not np.isfinite(gain):
        raise ConfigError(f"intensity gain must be positive and finite, got {gain}")
    return gain * upsample_bilinear(np.asarray(magnitude_coarse, dtype=np.float64), target_shape)


# -- chaining ------------------------------------------------------------------

@dataclass
class ReliableAnalysis:
    """Parameters at the finest reliable level ``level`` plus the relative
    phase measured against ``level + 1``."""

    level: int
    fields: ParameterFields
    m: np.ndarray
    phi_rel: np.ndarray
    phi_valid: np.ndarray


def analyze_reliable(stack: LevelStack, level: int, kernels=KERNELS) -> ReliableAnalysis:
    if level + 1 >= stack.depth:
        raise ConfigError(f"relative phase needs level {level + 1}; stack depth is {stack.depth}")
    resp_m = basis_responses(stack.gaussian[level], kernels)
    fields, m = fields_from_responses(resp_m, level)
    resp_c = basis_responses(stack.gaussian[level + 1], kernels)
    # steer the coarse responses at the medium orientation so both complex
    # pairs share one sign convention for H
    c = steered_complex(resp_c.map(lambda a: upsample_bilinear(a, m.shape)), fields.theta)
    phi_rel, ok = relative_phase(m, c)
    ok &= magnitude_mask(np.abs(c))
    return ReliableAnalysis(level, fields, m, phi_rel, ok)


def extrapolate_all(ref: ReliableAnalysis, fit: SlopeFit, n_missing: int, shapes,
                    remeasure_phi: bool = False) -> list[ParameterFields]:
    """Fields for levels ``ref.level - 1`` down to ``ref.level - n_missing``
    (returned in that order); ``shapes[k]`` is the shape of level ``k``."""
    if n_missing < 0 or n_missing > ref.level:
        raise ConfigError(f"cannot extrapolate {n_missing} levels below level {ref.level}")
    theta = ref.fields.theta
    m = ref.m
    phi_rel = ref.phi_rel
    mag = ref.fields.sigma
    valid = ref.fields.valid & ref.phi_valid
    out = []
    for step in range(1, n_missing + 1):
        lvl = ref.level - step
        shp = tuple(shapes[lvl])
        theta_f, conf = upsample_orientation(theta, shp)
        m_up = upsample_oriented_complex(m, theta, theta_f)
        phi_up = upsample_oriented_complex(phi_rel, theta, theta_f)
        arg_f, ok = extrapolate_phase(m_up, phi_up)
        mag = upsample_bilinear(mag, shp)
        sigma = fit.gain(lvl, ref.level) * mag
        valid = upsample_valid(valid, shp) & ok & (conf > ORIENTATION_CONFIDENCE)
        f = np.abs(m_up) * np.exp(1j * arg_f)
        if remeasure_phi:
            phi_rel, _ = relative_phase(f, m_up)
        else:
            phi_rel = phi_up
        m, theta = f, theta_f
        out.append(ParameterFields(theta_f, arg_f, np.maximum(sigma, 0.0), valid, lvl))
    return out
