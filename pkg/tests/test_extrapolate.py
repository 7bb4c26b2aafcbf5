import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from fovenhance.analysis import ParameterFields, analyze_level, wrap_angle
from fovenhance.errors import ConfigError, DegenerateSpectrumError, DimensionError
from fovenhance.extrapolate import (SlopeFit, analyze_reliable, estimate_spectrum_slope,
                                    extrapolate_all, extrapolate_intensity, extrapolate_phase,
                                    relative_phase, upsample_oriented_complex, upsample_orientation,
                                    upsample_valid)
from fovenhance.image import band_noise_gain, band_power, build_level_stack

from _stimuli import edge_image, line_image, radial_fft_slope, spectral_noise

angles = arrays(np.float64, (4, 5), elements=st.floats(0, np.pi, exclude_max=True))


def test_uniform_orientation():
    th, conf = upsample_orientation(np.full((4, 4), 1.0), (8, 8))
    np.testing.assert_allclose(th, 1.0, atol=1e-12)
    np.testing.assert_allclose(conf, 1.0)


def test_orientation_wrap_midpoint():
    # hand evaluation: (cos 358, sin 358) and (cos 2, sin 2) average to angle 0
    th, conf = upsample_orientation(np.radians([[179.0, 1.0]]), (1, 3))
    mid = np.degrees(th[0, 1])
    assert min(mid, 180 - mid) < 1e-9
    assert conf[0, 1] == pytest.approx(np.cos(np.radians(2.0)))


def test_orientation_plain_midpoint():
    th, _ = upsample_orientation(np.radians([[10.0, 30.0]]), (1, 3))
    assert np.degrees(th[0, 1]) == pytest.approx(20.0, abs=1e-6)


@given(angles, st.floats(-np.pi, np.pi))
def test_orientation_rotation_equivariance(th, delta):
    a, ca = upsample_orientation(th, (8, 10))
    b, _ = upsample_orientation(np.mod(th + delta, np.pi), (8, 10))
    ok = ca > 1e-3
    d = np.abs(wrap_angle(2 * (b - a - delta))) / 2
    assert np.all(d[ok] < 1e-6)


def test_relative_phase_examples():
    a, b = 0.7, -2.1
    phi, ok = relative_phase(np.array([[np.exp(1j * b)]]), np.array([[np.exp(1j * a)]]))
    assert np.angle(phi[0, 0]) == pytest.approx(float(wrap_angle(2 * a - b)))
    phi, _ = relative_phase(np.array([[3.0 + 0j]]), np.array([[2.0 + 0j]]))
    assert abs(phi[0, 0]) == pytest.approx(6.0)
    phi, ok = relative_phase(np.array([[1.0 + 0j]]), np.array([[0j]]))
    assert phi[0, 0] == 0 and not ok[0, 0]
    with pytest.raises(DimensionError):
        relative_phase(np.zeros((2, 2)), np.zeros((4, 4)))


cplx = arrays(np.float64, (2, 3, 4), elements=st.floats(-5, 5))


@given(cplx)
def test_relative_phase_identity(parts):
    m = parts[0] + 1j * parts[1]
    c = parts[1] - 0.5j * parts[0] + 0.1
    phi, ok = relative_phase(m, c)
    nz = ok & (np.abs(m) > 1e-6) & (np.abs(c) > 1e-6)
    d = wrap_angle(np.angle(phi) - (2 * np.angle(c) - np.angle(m)))
    assert np.all(np.abs(d[nz]) < 1e-6)
    np.testing.assert_allclose(np.abs(phi), np.abs(c) * np.abs(m), rtol=1e-9, atol=1e-12)


@given(st.floats(-np.pi, np.pi), st.floats(-np.pi, np.pi))
def test_phase_composition(alpha, beta):
    c, m = np.array([[np.exp(1j * alpha)]]), np.array([[np.exp(1j * beta)]])
    phi, _ = relative_phase(m, c)
    arg_f, ok = extrapolate_phase(m, phi)
    assert ok[0, 0]
    assert abs(float(wrap_angle(arg_f[0, 0] - (3 * beta - 2 * alpha)))) < 1e-6


def test_zero_phase_input():
    z = np.zeros((3, 3), complex)
    arg_f, ok = extrapolate_phase(z, z)
    assert not ok.any() and not np.any(arg_f)


def test_edge_signature():
    # step edge: relative phase at the edge sits at a quarter turn
    img = edge_image(256, 128)
    stack = build_level_stack(img, 5)
    for level in (1, 2):
        ref = analyze_reliable(stack, level)
        c = 128 // 2**level
        ph = np.angle(ref.phi_rel[20:-20, c - 1:c + 1])
        assert np.all(np.abs(np.abs(ph) - np.pi / 2) < np.pi / 8)


def test_intensity_extrapolation():
    mag = np.ones((4, 4))
    np.testing.assert_allclose(extrapolate_intensity(mag, 0.5, (8, 8)), 0.5)
    mag[:2] = 0
    s1 = extrapolate_intensity(mag, 1.0, (8, 8))
    np.testing.assert_allclose(extrapolate_intensity(mag, 2.0, (8, 8)), 2 * s1)
    assert not np.any(s1[:3])
    with pytest.raises(ConfigError):
        extrapolate_intensity(mag, 0.0, (8, 8))


@given(arrays(bool, (5, 6)))
def test_invalid_propagates(valid):
    up = upsample_valid(valid, (10, 12))
    # pixel 2i sits exactly on source sample i
    assert np.all(up[::2, ::2] <= valid)
    up2 = upsample_valid(up, (20, 24))
    assert np.all(up2[::4, ::4] <= valid)


def test_aligned_complex_upsampling_handles_fold():
    # neighbours at 179 and 1 degrees are the same structure; the pair with
    # the opposite representative carries the conjugate response
    th = np.radians([[1.0, 179.0]])
    z = np.array([[1 + 1j, 1 - 1j]])
    th_f, _ = upsample_orientation(th, (1, 3))
    up = upsample_oriented_complex(z, th, th_f)
    assert up[0, 1] == pytest.approx(1 + 1j)


@pytest.mark.parametrize("exponent,expect", [(2.0, 2.0), (0.0, 0.0), (1.0, 1.0)])
def test_slope_matches_fft_oracle(exponent, expect):
    for seed in range(3):
        img = spectral_noise(256, exponent, seed)
        fit = estimate_spectrum_slope(build_level_stack(img, 5))
        assert fit.slope == pytest.approx(expect, abs=0.3)
        assert fit.slope == pytest.approx(radial_fft_slope(img), abs=0.3)


def test_band_power_consistent_with_noise_gain():
    # exact white-noise gains (adjoint rows) vs the transfer-function integral
    for k in range(5):
        assert band_power(k, 0.0) == pytest.approx(band_noise_gain(k), rel=1e-6)
    assert band_noise_gain(0) == pytest.approx(0.889449868, abs=1e-8)
    assert band_noise_gain(2) == pytest.approx(0.010069804, abs=1e-8)


def test_noise_gain_matches_measurement():
    x = np.random.default_rng(0).standard_normal((512, 512))
    stack = build_level_stack(x, 5)
    for k in range(3):
        b = stack.laplacian[k][8:-8, 8:-8]
        assert np.mean(b**2) == pytest.approx(band_noise_gain(k), rel=0.05)


def test_predicted_std_tracks_true_band():
    img = spectral_noise(512, 2.0, 4)
    stack = build_level_stack(img, 6, [False, False, True, True, True, True])
    fit = estimate_spectrum_slope(stack)
    for lvl in (0, 1):
        assert fit.target_std[lvl] == pytest.approx(np.std(stack.laplacian[lvl]), rel=0.1)


def test_line_method_available():
    fit = estimate_spectrum_slope(build_level_stack(spectral_noise(256, 2.0, 0), 5), method="line")
    assert fit.method == "line" and np.isfinite(fit.slope)
    with pytest.raises(ConfigError):
        estimate_spectrum_slope(build_level_stack(spectral_noise(64, 2.0, 0), 3), method="cubic")


def test_slope_errors():
    with pytest.raises(DegenerateSpectrumError):
        estimate_spectrum_slope(build_level_stack(np.full((64, 64), 0.5), 3))
    with pytest.raises(ConfigError):
        estimate_spectrum_slope(build_level_stack(spectral_noise(64, 2, 0), 3, [False, True, True]))


def test_zero_band_excluded():
    img = spectral_noise(256, 2.0, 1)
    stack = build_level_stack(img, 5)
    stack.laplacian[0][:] = 0.0
    fit = estimate_spectrum_slope(stack)
    assert fit.levels_used == 3


@given(st.floats(0.1, 4.0))
def test_gain_monotone(slope):
    fit = SlopeFit(slope, 0.0, 3, 4)
    gains = [fit.gain(l) for l in range(4)]
    assert all(a < b for a, b in zip(gains, gains[1:]))
    assert all(np.isfinite(g) and g > 0 for g in gains)


def test_slopefit_round_trip():
    fit = estimate_spectrum_slope(build_level_stack(spectral_noise(128, 2, 0), 4, [False, True, True, True]))
    again = SlopeFit.from_dict(fit.to_dict())
    assert again == fit


def test_extrapolate_all_zero_levels():
    stack = build_level_stack(line_image(128), 4)
    ref = analyze_reliable(stack, 2)
    assert extrapolate_all(ref, SlopeFit(2.0, 0.0, 2, 2), 0, stack.shapes) == []
    with pytest.raises(ConfigError):
        extrapolate_all(ref, SlopeFit(2.0, 0.0, 2, 2), 3, stack.shapes)


@pytest.mark.parametrize("remeasure", [False, True])
def test_line_phase_matches_true_fine_level(remeasure):
    img = line_image(128, 64)
    stack = build_level_stack(img, 4)
    ref = analyze_reliable(stack, 2)
    (f1,) = extrapolate_all(ref, SlopeFit(2.0, 0.0, 2, 2), 1, stack.shapes, remeasure)
    truth = analyze_level(stack.gaussian[1], level_index=1)
    cols = slice(32 - 1, 32 + 2)
    sel = np.s_[8:-8, cols]
    ok = f1.valid[sel] & truth.valid[sel]
    err = np.abs(wrap_angle(f1.phi[sel] - truth.phi[sel]))[ok]
    assert ok.sum() > 0
    assert np.median(err) < np.pi / 4


def test_invalid_source_stays_invalid():
    img = line_image(128, 64)
    img[:, :20] = 0.15          # flat margin is invalid at level 2
    stack = build_level_stack(img, 4)
    ref = analyze_reliable(stack, 2)
    src_invalid = ~(ref.fields.valid & ref.phi_valid)
    out = extrapolate_all(ref, SlopeFit(2.0, 0.0, 2, 2), 2, stack.shapes)
    for f in out:
        step = 2 ** (2 - f.level)
        assert not np.any(f.valid[::step, ::step][src_invalid])


def test_fields_shapes_and_sigma_nonnegative():
    stack = build_level_stack(spectral_noise(256, 2, 3), 5)
    ref = analyze_reliable(stack, 3)
    out = extrapolate_all(ref, SlopeFit(2.0, 0.0, 2, 3), 2, stack.shapes)
    assert [f.level for f in out] == [2, 1]
    for f in out:
        assert isinstance(f, ParameterFields)
        assert f.shape == stack.shapes[f.level]
        assert np.all(f.sigma >= 0)
        assert np.all((f.phi > -np.pi) & (f.phi <= np.pi))
