import math

import numpy as np
import pytest

from maskdiff.kspace import acceleration_factor
from maskdiff.patterns import (
    KINDS,
    TOLERANCE,
    PatternError,
    PatternSpec,
    center_region,
    generate_pattern,
    poisson_points,
    radial_mask,
    radial_search,
    radius_profile,
    spoke_pixels,
)


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("size", [64, 256])
def test_af_within_tolerance_across_seeds(kind, size):
    for seed in range(10):
        for R in (4, 8):
            mask = generate_pattern(PatternSpec(kind, R, 0.04, seed), size, size)
            assert abs(acceleration_factor(mask) / R - 1) <= TOLERANCE[kind]


@pytest.mark.parametrize("kind", ["random2d", "poisson"])
def test_dense_limit(kind):
    mask = generate_pattern(PatternSpec(kind, 1.02, 0.0, 0), 32, 32)
    assert mask.mean() > 0.9
    assert abs(acceleration_factor(mask) / 1.02 - 1) <= TOLERANCE[kind]


def test_random2d_popcount():
    mask = generate_pattern(PatternSpec("random2d", 8, 0.04, 0), 256, 256)
    assert abs(mask.sum() - 8192) <= 0.05 * 8192


@pytest.mark.parametrize("kind", KINDS)
def test_center_is_fully_sampled(kind):
    mask = generate_pattern(PatternSpec(kind, 6, 0.08, 1), 64, 64)
    c = center_region(64, 64, 0.08)
    assert c.sum() == round(0.08 * 64) ** 2
    assert mask[c].all()


@pytest.mark.parametrize("kind", KINDS)
def test_deterministic(kind):
    a = generate_pattern(PatternSpec(kind, 6, 0.04, 3), 64, 64)
    b = generate_pattern(PatternSpec(kind, 6, 0.04, 3), 64, 64)
    assert np.array_equal(a, b)


def test_seeds_differ():
    a = generate_pattern(PatternSpec("random2d", 6, 0.04, 3), 64, 64)
    b = generate_pattern(PatternSpec("random2d", 6, 0.04, 4), 64, 64)
    assert not np.array_equal(a, b)


def test_center_over_budget():
    with pytest.raises(PatternError, match="center"):
        generate_pattern(PatternSpec("random2d", 15, 0.5, 0), 64, 64)


def test_spec_validation():
    with pytest.raises(ValueError):
        PatternSpec("spiral")
    with pytest.raises(ValueError):
        PatternSpec("random2d", 1.0)
    with pytest.raises(ValueError):
        PatternSpec("random2d", 4, 1.0)


def test_radial_spokes_cross_centre_and_lie_on_their_line():
    h = w = 64
    mask, n, offset = radial_search(PatternSpec("radial", 6, 0.0, 2), h, w)
    union = np.zeros((h, w), bool)
    for i in range(n):
        angle = offset + 2 * math.pi * i / n
        r, c = spoke_pixels(h, w, angle)
        assert (h // 2, w // 2) in set(zip(r.tolist(), c.tolist()))
        # distance from the ray's line; rounding moves a point at most sqrt(2)/2
        dy, dx = r - h // 2, c - w // 2
        dist = np.abs(dx * math.sin(angle) - dy * math.cos(angle))
        assert np.all(dist <= math.sqrt(2) / 2 + 1e-9)
        union[r, c] = True
    assert np.array_equal(union, mask)
    assert np.array_equal(radial_mask(h, w, n, offset), mask)


def test_poisson_minimum_distance():
    h = w = 64
    center = center_region(h, w, 0.04)
    r0 = 3.0
    pts = poisson_points(h, w, r0, center, seed=0)
    rmin = radius_profile(h, w, r0).min()
    rr, cc = np.nonzero(pts)
    d2 = (rr[:, None] - rr[None]) ** 2 + (cc[:, None] - cc[None]) ** 2
    np.fill_diagonal(d2, 10**9)
    assert d2.min() >= rmin**2


def test_poisson_density_falls_off():
    mask = generate_pattern(PatternSpec("poisson", 6, 0.0, 0), 128, 128)
    yy, xx = np.mgrid[:128, :128]
    d = np.hypot(yy - 64, xx - 64)
    assert mask[d < 20].mean() > mask[d > 50].mean()


def test_non_square_grid():
    mask = generate_pattern(PatternSpec("poisson", 4, 0.04, 0), 48, 80)
    assert mask.shape == (48, 80)
    assert abs(acceleration_factor(mask) / 4 - 1) <= TOLERANCE["poisson"]
