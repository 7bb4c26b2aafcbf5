import numpy as np
import pytest
from hypothesis import given, strategies as st

from fovenhance.errors import ConfigError, DimensionError
from fovenhance.image import (ChromaPair, build_level_stack, expand, from_luma_chroma, level_shapes,
                              linear_to_srgb, max_depth, reduce, srgb_to_linear, to_luma_chroma,
                              upsample_bilinear)


def _mirror(i, n):
    while i < 0 or i >= n:
        i = -i if i < 0 else 2 * (n - 1) - i
    return i


def reduce_loop(img):
    """Scalar-loop reduce: 5x5 binomial with reflect-without-repeat borders."""
    w = np.array([1, 4, 6, 4, 1]) / 16.0
    h, wd = img.shape
    out = np.zeros(((h + 1) // 2, (wd + 1) // 2))
    for y in range(0, h, 2):
        for x in range(0, wd, 2):
            acc = 0.0
            for dy in range(-2, 3):
                for dx in range(-2, 3):
                    acc += w[dy + 2] * w[dx + 2] * img[_mirror(y + dy, h), _mirror(x + dx, wd)]
            out[y // 2, x // 2] = acc
    return out


def bilinear_loop(src, shape):
    h, w = src.shape
    out = np.zeros(shape, dtype=src.dtype)
    for j in range(shape[0]):
        for i in range(shape[1]):
            py, px = min(j / 2, h - 1), min(i / 2, w - 1)
            y0, x0 = int(py), int(px)
            y1, x1 = min(y0 + 1, h - 1), min(x0 + 1, w - 1)
            ty, tx = py - y0, px - x0
            out[j, i] = ((1 - ty) * ((1 - tx) * src[y0, x0] + tx * src[y0, x1])
                         + ty * ((1 - tx) * src[y1, x0] + tx * src[y1, x1]))
    return out


def test_reduce_matches_loop_oracle():
    rng = np.random.default_rng(0)
    img = rng.random((13, 10))
    np.testing.assert_allclose(reduce(img), reduce_loop(img), atol=1e-12)


def test_reduce_dims_round_up():
    assert reduce(np.zeros((33, 20))).shape == (17, 10)
    assert level_shapes((100, 75), 4) == [(100, 75), (50, 38), (25, 19), (13, 10)]


def test_bilinear_matches_loop_oracle():
    rng = np.random.default_rng(1)
    src = rng.random((7, 9))
    for shape in [(14, 18), (13, 17)]:
        np.testing.assert_allclose(upsample_bilinear(src, shape), bilinear_loop(src, shape), atol=1e-12)


def test_bilinear_is_interpolating():
    out = upsample_bilinear(np.array([[0.0, 1.0]]), (2, 4))
    np.testing.assert_allclose(out[0], [0.0, 0.5, 1.0, 1.0])


def test_bilinear_complex():
    rng = np.random.default_rng(2)
    z = rng.random((5, 6)) + 1j * rng.random((5, 6))
    up = upsample_bilinear(z, (10, 12))
    np.testing.assert_allclose(up.real, upsample_bilinear(z.real, (10, 12)))
    np.testing.assert_allclose(up.imag, upsample_bilinear(z.imag, (10, 12)))


def test_upsample_rejects_wrong_dims():
    with pytest.raises(DimensionError):
        upsample_bilinear(np.zeros((4, 4)), (12, 8))
    with pytest.raises(DimensionError):
        expand(np.zeros((4, 4)), (8, 11))


def test_expand_preserves_constants():
    np.testing.assert_allclose(expand(np.full((5, 6), 0.3), (9, 12)), 0.3, atol=1e-15)


@given(st.integers(16, 70), st.integers(16, 70), st.integers(0, 2**31 - 1))
def test_collapse_reconstructs_input(h, w, seed):
    img = np.random.default_rng(seed).random((h, w))
    depth = min(max_depth((h, w)), 3)
    if depth < 2:
        return
    stack = build_level_stack(img, depth)
    np.testing.assert_allclose(stack.collapse(), img, atol=1e-12)


def test_depth_limits():
    with pytest.raises(ConfigError):
        build_level_stack(np.zeros((64, 64)), 1)
    with pytest.raises(ConfigError, match="too large"):
        build_level_stack(np.zeros((64, 64)), 4)
    assert build_level_stack(np.zeros((64, 64)), 3).shapes[-1] == (16, 16)


def test_stack_reliability_flags():
    st_ = build_level_stack(np.zeros((64, 64)), 3, [False, True, True])
    assert st_.reliable_bands() == [1]
    with pytest.raises(DimensionError):
        build_level_stack(np.zeros((64, 64)), 3, [True])


def test_luma_chroma_round_trip():
    rgb = np.random.default_rng(3).random((6, 5, 3))
    y, c = to_luma_chroma(rgb)
    np.testing.assert_allclose(y, rgb @ [0.299, 0.587, 0.114])
    np.testing.assert_allclose(from_luma_chroma(y, c), rgb, atol=1e-12)


def test_grey_has_zero_chroma():
    _, c = to_luma_chroma(np.full((3, 3, 3), 0.4))
    np.testing.assert_allclose(c.cb, 0, atol=1e-15)
    np.testing.assert_allclose(c.cr, 0, atol=1e-15)


def test_channel_mismatch_rejected():
    with pytest.raises(DimensionError):
        to_luma_chroma([np.zeros((4, 4)), np.zeros((4, 4)), np.zeros((4, 5))])
    with pytest.raises(DimensionError):
        ChromaPair(np.zeros((2, 2)), np.zeros((3, 2)))


def test_srgb_round_trip():
    v = np.linspace(0, 1, 101)
    np.testing.assert_allclose(linear_to_srgb(srgb_to_linear(v)), v, atol=1e-12)
    assert srgb_to_linear(0.5) == pytest.approx(0.21404, abs=1e-5)
