import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fovenhance.errors import ConfigError, DimensionError
from fovenhance.foveation import (ClampWarning, FoveationModel, ReliabilityMap, band_to_full,
                                  compose_enhanced, compose_luma, eccentricity_of, foveate,
                                  level_blur, levels_for_threshold, reliability_map,
                                  stack_from_foveated)
from fovenhance.image import (ChromaPair, build_level_stack, reduce, to_luma_chroma,
                              upsample_bilinear)

from _stimuli import pink_image


def test_eccentricity_examples():
    m = FoveationModel(gaze=(100.0, 50.0), pixels_per_degree=80.0)
    assert float(eccentricity_of(100, 50, m)) == 0.0
    assert float(eccentricity_of(180, 50, m)) == pytest.approx(1.0, abs=1e-9)
    d = 80.0 / math.tan(math.radians(1.0))
    for px, py in [(2000, 1500), (-900, 40)]:
        ref = math.degrees(math.atan(math.hypot(px - 100, py - 50) / d))
        assert float(eccentricity_of(px, py, m)) == pytest.approx(ref, abs=0.1)


def test_eccentricity_with_offset_eye():
    # eye in front of (0, 0), gaze at (x, 0): angle between two rays
    m = FoveationModel(gaze=(800.0, 0.0), pixels_per_degree=80.0, eye=(0.0, 0.0))
    d = m.viewing_distance
    ref = math.degrees(math.atan(1600 / d) - math.atan(800 / d))
    assert float(eccentricity_of(1600, 0, m)) == pytest.approx(ref, abs=1e-9)


def test_level_blur_and_thresholds():
    np.testing.assert_allclose(level_blur([0, 1, 2, 3]), [0, 1, math.sqrt(5), math.sqrt(21)])
    lv = levels_for_threshold(np.array([0.0, 0.99, 1.0, 2.3, 4.6, 1e6]), 10)
    np.testing.assert_array_equal(lv, [0, 0, 1, 2, 3, 20])   # unclamped here


def test_model_validation():
    with pytest.raises(ConfigError):
        FoveationModel(pixels_per_degree=0)
    with pytest.raises(ConfigError):
        FoveationModel(threshold_slope=-1)
    with pytest.raises(ConfigError):
        FoveationModel(grade="contrast")
    assert FoveationModel(foveal_radius="medium").foveal_radius == 16.0


def test_gaze_pixel_untouched_and_uniform_level():
    img = pink_image(128, 1)
    m = FoveationModel(gaze=(64, 64), threshold_slope=0.5)
    base, rel = foveate(img, m, 3)
    assert rel.levels[64, 64] == 0
    assert base[64, 64] == img[64, 64]
    m2 = FoveationModel(gaze=(64, 64), threshold_slope=0.0, threshold_intercept=2.5)
    base2, rel2 = foveate(img, m2, 3)
    assert rel2.distinct() == [2]
    g2 = reduce(reduce(img))
    expect = upsample_bilinear(upsample_bilinear(g2, (64, 64)), (128, 128))
    np.testing.assert_allclose(base2, expect, atol=1e-12)


def test_radial_monotone():
    m = FoveationModel(gaze=(50, 40), threshold_slope=0.4)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ClampWarning)
        rel = reliability_map((100, 120), m, 5)
    yy, xx = np.mgrid[0:100, 0:120]
    order = np.argsort(eccentricity_of(xx, yy, m).ravel(), kind="stable")
    assert np.all(np.diff(rel.levels.ravel()[order]) >= 0)


@given(st.floats(0, 2), st.floats(0, 3), st.floats(0, 2), st.floats(0, 3))
def test_monotone_masking(s1, i1, ds, di):
    a = FoveationModel(gaze=(10, 20), pixels_per_degree=20, threshold_slope=s1, threshold_intercept=i1)
    b = FoveationModel(gaze=(10, 20), pixels_per_degree=20, threshold_slope=s1 + ds,
                       threshold_intercept=i1 + di)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ClampWarning)
        ra, rb = reliability_map((30, 40), a, 4), reliability_map((30, 40), b, 4)
    assert np.all(rb.levels >= ra.levels)


def test_clamp_warns():
    m = FoveationModel(threshold_intercept=100.0)
    with pytest.warns(ClampWarning):
        rel = reliability_map((32, 32), m, 2)
    assert rel.clamped and rel.distinct() == [2]


def test_foveal_radius_preset_keeps_centre():
    m = FoveationModel(gaze=(100, 100), pixels_per_degree=4, threshold_slope=1.0, foveal_radius=8.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ClampWarning)
        rel = reliability_map((200, 200), m, 4)
    assert rel.levels[100, 100 + 30] == 0      # 7.5 deg
    assert rel.levels[100, 100 + 40] > 0       # 10 deg


def test_stack_from_foveated_recovers_level():
    img = pink_image(128, 2)
    m = FoveationModel(threshold_intercept=2.5, threshold_slope=0.0)
    base, _ = foveate(img, m, 3)
    st_ = stack_from_foveated(base, 2, 4)
    ref = build_level_stack(img, 4)
    np.testing.assert_allclose(st_.gaussian[2], ref.gaussian[2], atol=1e-12)
    np.testing.assert_allclose(st_.gaussian[3], ref.gaussian[3], atol=1e-12)
    assert st_.reliable == [False, False, True, True]
    with pytest.raises(ConfigError):
        stack_from_foveated(base, 5, 4)


def test_compose_rules():
    base = np.random.default_rng(0).random((16, 16))
    rel = ReliabilityMap(np.zeros((16, 16), int), 3)
    np.testing.assert_array_equal(compose_luma(base, {}, rel), base)
    band = np.ones((16, 16))
    np.testing.assert_array_equal(compose_luma(base, {1: band}, rel), base)
    lv = np.zeros((16, 16), int)
    lv[:, 8:] = 2
    rel2 = ReliabilityMap(lv, 3)
    out = compose_luma(base, {1: band, 0: 10 * band}, rel2)
    np.testing.assert_array_equal(out[:, :8], base[:, :8])
    np.testing.assert_allclose(out[:, 8:], base[:, 8:] + 11)
    with pytest.raises(DimensionError):
        compose_luma(base, {1: np.ones((8, 8))}, rel2)


def test_compose_enhanced_carries_chroma():
    rgb = np.random.default_rng(1).random((8, 8, 3))
    y, c = to_luma_chroma(rgb)
    rel = ReliabilityMap(np.zeros((8, 8), int), 2)
    np.testing.assert_allclose(compose_enhanced(y, {}, rel, c), rgb, atol=1e-12)
    grey = compose_enhanced(y, {}, rel)
    np.testing.assert_allclose(grey[..., 0], grey[..., 1])


def test_band_to_full_shapes():
    out = band_to_full(np.ones((25, 19)), 2, (100, 75))
    assert out.shape == (100, 75)
    np.testing.assert_allclose(out, 1.0)
    with pytest.raises(DimensionError):
        band_to_full(np.ones((20, 19)), 2, (100, 75))


def test_chroma_foveated_like_luma():
    img = pink_image(64, 3)
    chroma = ChromaPair(img.copy(), 1 - img)
    m = FoveationModel(gaze=(0, 0), threshold_slope=0.6)
    base, rel, cb = foveate(img, m, 2, chroma)
    np.testing.assert_allclose(cb.cb, base)
    np.testing.assert_allclose(cb.cr, 1 - base, atol=1e-12)
