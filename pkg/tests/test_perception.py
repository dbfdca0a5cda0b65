import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from stealthmark.embedder import InjectionSpec, embed_payload
from stealthmark.errors import DimensionError
from stealthmark.imaging import GrayBuffer, ImageBuffer, PayloadMask
from stealthmark.perception import (
    DEFAULT_JND,
    JndConfig,
    Verdict,
    classify_strength_sweep,
    jnd_map,
    jnd_ratio,
    luminance_threshold,
    verdict_for,
)

from conftest import flat


def const(v, n=16):
    return GrayBuffer(np.full((n, n), v, np.uint8))


def placed_square(size=64, n=20, at=10):
    bits = np.zeros((size, size), bool)
    bits[at:at + n, at:at + n] = True
    return PayloadMask(bits)


def test_constant_images():
    assert np.allclose(jnd_map(const(128)).thresholds, 3.0)
    assert np.allclose(jnd_map(const(0)).thresholds, 17.0)
    # bright side: T_mid + 3/128 * (255 - 128)
    assert np.allclose(jnd_map(const(255)).thresholds, 3.0 + 3.0 * 127 / 128)


def test_luminance_curve_values():
    # dark branch at 32: 14 * (1 - sqrt(1/4)) + 3 = 10
    assert luminance_threshold(32.0) == pytest.approx(10.0)
    assert luminance_threshold(128.0) == pytest.approx(3.0)


@settings(max_examples=30, deadline=None)
@given(arrays(np.uint8, (12, 12)))
def test_thresholds_non_negative(a):
    assert (jnd_map(GrayBuffer(a)).thresholds >= 0).all()


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 128))
def test_darker_never_lower_than_mid_gray(v):
    assert jnd_map(const(v)).thresholds.min() >= jnd_map(const(128)).thresholds.max() - 1e-12


def test_edges_raise_threshold():
    a = np.full((16, 16), 128, np.uint8)
    a[:, 8:] = 228
    thr = jnd_map(GrayBuffer(a)).thresholds
    assert thr[8, 8] > 5.0


def test_zero_residual_is_invisible():
    img = flat(64, 64)
    rep = jnd_ratio(img, img, placed_square())
    assert rep.jnd_ratio == 1.0 and rep.verdict is Verdict.INVISIBLE


@pytest.mark.parametrize("strength,ratio,verdict", [(2, 1.0, "invisible"), (10, 0.0, "visible")])
def test_mid_gray_strengths(strength, ratio, verdict):
    img = flat(64, 64)
    mask = placed_square()
    out, _ = embed_payload(img, InjectionSpec(mask, mask.bbox[:2], strength=strength))
    rep = jnd_ratio(img, out, mask)
    assert rep.jnd_ratio == ratio and rep.verdict.value == verdict
    assert rep.pixels_evaluated == 400
    assert rep.to_dict() == {"jnd_ratio": ratio, "verdict": verdict, "pixels_evaluated": 400}


def test_ratio_errors():
    img = flat(64, 64)
    with pytest.raises(ValueError):
        jnd_ratio(img, img, PayloadMask(np.zeros((64, 64), bool)))
    with pytest.raises(DimensionError):
        jnd_ratio(img, flat(64, 65), placed_square())
    with pytest.raises(DimensionError):
        jnd_ratio(img, img, placed_square(size=32, n=4, at=0))


def test_sweep_on_mid_gray():
    reps = classify_strength_sweep(flat(64, 64), placed_square(), [0, 1, 2, 5, 10])
    assert [r.jnd_ratio for r in reps] == [1.0, 1.0, 1.0, 0.0, 0.0]
    with pytest.raises(ValueError):
        classify_strength_sweep(flat(64, 64), placed_square(), [])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_ratio_monotone_on_random_flat_backgrounds(seed):
    r = np.random.default_rng(seed)
    img = ImageBuffer.filled(64, 64, tuple(int(v) for v in r.integers(20, 240, 3)))
    bits = np.zeros((64, 64), bool)
    bits[8:40, 8:40] = r.random((32, 32)) < 0.6
    bits[8, 8] = True
    ratios = [rep.jnd_ratio for rep in classify_strength_sweep(img, PayloadMask(bits), range(0, 16))]
    assert all(a >= b for a, b in zip(ratios, ratios[1:]))


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 1))
def test_verdict_is_function_of_ratio(x):
    v = verdict_for(x)
    expected = "invisible" if x >= 0.95 else "visible" if x <= 0.5 else "borderline"
    assert v.value == expected and verdict_for(x) is v


def test_config_validation():
    with pytest.raises(ValueError):
        JndConfig(visible_cutoff=0.9, invisible_cutoff=0.8)
    with pytest.raises(ValueError):
        JndConfig(t_mid=-1)
    assert DEFAULT_JND.t_mid == 3.0 and DEFAULT_JND.t_dark == 17.0
