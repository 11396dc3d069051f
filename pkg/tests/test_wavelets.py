import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from maskdiff.wavelets import WaveletSpec, dwt2, highpass, idwt2, lowpass

FAMILIES = ["haar", "db4"]


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@pytest.mark.parametrize("family", FAMILIES)
def test_perfect_reconstruction(family):
    spec = WaveletSpec(family, 2)
    rng = np.random.default_rng(0)
    for _ in range(50):
        x = crandn(rng, 32, 32)
        err = np.linalg.norm(idwt2(dwt2(x, spec), spec) - x) / np.linalg.norm(x)
        assert err < 1e-10


def test_haar_constant():
    c = 1.5 - 0.5j
    s = dwt2(np.full((8, 8), c), WaveletSpec("haar", 1))
    np.testing.assert_allclose(s.approximation, 2 * c, atol=1e-12)
    for band in s.details[0]:
        np.testing.assert_allclose(band, 0, atol=1e-12)


def test_haar_butterfly():
    a, b, c, d = 1.0, 2.0, 3.0, 4.0
    s = dwt2(np.array([[a, b], [c, d]]), WaveletSpec("haar", 1))
    lh, hl, hh = s.details[0]
    assert np.isclose(s.approximation[0, 0], (a + b + c + d) / 2)
    assert np.isclose(lh[0, 0], (a + b - c - d) / 2)
    assert np.isclose(hl[0, 0], (a - b + c - d) / 2)
    assert np.isclose(hh[0, 0], (a - b - c + d) / 2)


@pytest.mark.parametrize("family", FAMILIES)
def test_complementary_bands(family):
    spec = WaveletSpec(family, 2)
    rng = np.random.default_rng(1)
    for _ in range(20):
        x = crandn(rng, 32, 32)
        np.testing.assert_allclose(highpass(x, spec) + lowpass(x, spec), x, atol=1e-10 * np.abs(x).max())


@pytest.mark.parametrize("family", FAMILIES)
def test_constant_has_no_detail(family):
    spec = WaveletSpec(family, 2)
    x = np.full((16, 16), 2.0 + 1.0j)
    np.testing.assert_allclose(highpass(x, spec), 0, atol=1e-12)
    np.testing.assert_allclose(lowpass(x, spec), x, atol=1e-12)


def test_impulse_against_subband_oracle():
    spec = WaveletSpec("haar", 1)
    x = np.zeros((8, 8))
    x[0, 0] = 1.0
    s = dwt2(x, spec)
    only_approx = type(s)(s.approximation, [tuple(np.zeros_like(b) for b in s.details[0])])
    only_detail = type(s)(np.zeros_like(s.approximation), s.details)
    np.testing.assert_allclose(lowpass(x, spec), idwt2(only_approx, spec), atol=1e-12)
    np.testing.assert_allclose(highpass(x, spec), idwt2(only_detail, spec), atol=1e-12)
    np.testing.assert_allclose(highpass(x, spec) + lowpass(x, spec), x, atol=1e-12)
    # Haar approximation of an impulse spreads evenly over its 2x2 block
    np.testing.assert_allclose(lowpass(x, spec)[:2, :2], 0.25, atol=1e-12)


def test_linearity():
    spec = WaveletSpec("db4", 2)
    rng = np.random.default_rng(2)
    x, y = crandn(rng, 16, 16), crandn(rng, 16, 16)
    a = 0.3 - 1.2j
    np.testing.assert_allclose(highpass(a * x + y, spec), a * highpass(x, spec) + highpass(y, spec), atol=1e-10)


def test_bad_shape_names_fix():
    with pytest.raises(ValueError, match="pad|levels"):
        dwt2(np.ones((12, 10)), WaveletSpec("haar", 2))


def test_unknown_family():
    with pytest.raises(ValueError):
        WaveletSpec("sym8")


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, (16, 16), elements=st.floats(-1e3, 1e3)), st.sampled_from(FAMILIES), st.integers(1, 3))
def test_property_round_trip(x, family, levels):
    spec = WaveletSpec(family, levels)
    np.testing.assert_allclose(idwt2(dwt2(x, spec), spec), x, atol=1e-9 * max(1.0, np.abs(x).max()))
    np.testing.assert_allclose(highpass(x, spec) + lowpass(x, spec), x, atol=1e-9 * max(1.0, np.abs(x).max()))
