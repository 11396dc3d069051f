import numpy as np
import pytest

from maskdiff.masks import AdaptiveMask, HybridMaskSet, ThresholdRange, apply_mask, generate_masks
from maskdiff.stack import (
    ChannelLayout,
    StackedTensor,
    channel_mean,
    layout_d1,
    layout_d2,
    mask_weighted_mean,
    merge_complex,
    replicate,
    split_complex,
    stack_hybrid,
    unstack,
)

Q = ThresholdRange.quantile


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def ones_set(shape, n_high=2):
    m = lambda kind: AdaptiveMask(kind, np.ones(shape, bool), ThresholdRange())
    return HybridMaskSet(m("low"), tuple(m("high") for _ in range(n_high)))


def test_split_merge():
    rng = np.random.default_rng(0)
    k = crandn(rng, 8, 8)
    re, im = split_complex(k.real.astype(complex))
    assert not im.any()
    assert np.array_equal(merge_complex(*split_complex(k)), k)
    re, im = split_complex(k)
    re2, im2 = split_complex(1j * k)
    assert np.array_equal(re2, -im) and np.array_equal(im2, re)


def test_layouts():
    assert layout_d1().order() == ("H1", "L", "H2")
    assert layout_d2().order() == ("L", "H1", "H2")
    assert layout_d1().n_planes == 6
    assert layout_d1(3).n_planes == 8


def test_all_ones_gives_identical_channels():
    k = crandn(np.random.default_rng(1), 8, 8)
    t = stack_hybrid(k, ones_set((8, 8)), layout_d1())
    assert t.channels.shape == (6, 8, 8)
    for c in unstack(t):
        assert np.array_equal(c, k)


def test_unstack_inverts_stack():
    k = crandn(np.random.default_rng(2), 16, 16)
    masks = generate_masks(k)
    for layout in (layout_d1(), layout_d2()):
        t = stack_hybrid(k, masks, layout)
        for c, m in zip(unstack(t), layout.masks_in_order(masks)):
            assert np.array_equal(c, apply_mask(k, m))


def test_layouts_are_permutations():
    k = crandn(np.random.default_rng(3), 16, 16)
    masks = generate_masks(k)
    a = stack_hybrid(k, masks, layout_d1()).channels
    b = stack_hybrid(k, masks, layout_d2()).channels
    key = lambda planes: sorted(p.tobytes() for p in planes)
    assert key(a) == key(b)
    assert not np.array_equal(a, b)


def test_channel_mean():
    k = crandn(np.random.default_rng(4), 8, 8)
    assert np.allclose(channel_mean(replicate(k, layout_d1())), k)
    planes = np.stack([k.real, k.imag, -k.real, -k.imag])
    assert not channel_mean(StackedTensor(planes, layout_d1(1))).any()


def test_channel_mean_oracle_complementary_masks():
    k = crandn(np.random.default_rng(5), 8, 8)
    masks = generate_masks(k, low_range=Q(0.0, 0.5), high_ranges=[Q(0.5, 1.0), Q(0.75, 1.0)])
    t = stack_hybrid(k, masks, layout_d1())
    kl, k1, k2 = (np.where(m.grid, k, 0) for m in (masks.low, *masks.highs))
    expect = np.empty_like(k)
    for i in range(8):
        for j in range(8):
            expect[i, j] = (kl[i, j] + k1[i, j] + k2[i, j]) / 3
    np.testing.assert_allclose(channel_mean(t), expect, atol=1e-14)


def test_mask_weighted_mean_restores_k():
    k = crandn(np.random.default_rng(6), 8, 8)
    masks = generate_masks(k)
    t = stack_hybrid(k, masks, layout_d1())
    covered = masks.low.grid | np.any([m.grid for m in masks.highs], axis=0)
    out = mask_weighted_mean(t, masks)
    np.testing.assert_allclose(out[covered], k[covered], atol=1e-14)
    assert not out[~covered].any()


def test_stacked_tensor_validation():
    with pytest.raises(ValueError):
        StackedTensor(np.zeros((5, 4, 4)), layout_d1())
    bad = np.zeros((6, 4, 4))
    bad[0, 0, 0] = np.nan
    with pytest.raises(ValueError):
        StackedTensor(bad, layout_d1())


def test_mask_count_mismatch():
    k = crandn(np.random.default_rng(7), 8, 8)
    with pytest.raises(ValueError):
        stack_hybrid(k, ones_set((8, 8), 3), layout_d1())


def test_layout_validation():
    with pytest.raises(ValueError):
        ChannelLayout("sideways", 2)
    with pytest.raises(ValueError):
        ChannelLayout("before", 0)
