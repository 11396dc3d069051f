"""Undersampling patterns at a target acceleration factor.

Three kinds are supported: pointwise 2D random, variable-density Poisson
disc, and radial spokes. Every kind fully samples a central square whose side
is ``round(center_fraction * dim)`` pixels per axis, then calibrates the
remaining samples to hit the requested acceleration.
"""

import math
from dataclasses import dataclass

import numba
import numpy as np

RANDOM2D = "random2d"
POISSON = "poisson"
RADIAL = "radial"
KINDS = (RANDOM2D, POISSON, RADIAL)

# Relative acceleration-factor tolerance per kind.
TOLERANCE = {RANDOM2D: 0.05, POISSON: 0.05, RADIAL: 0.10}


class PatternError(ValueError):
    pass


@dataclass(frozen=True)
class PatternSpec:
    kind: str = RANDOM2D
    target_R: float = 4.0
    center_fraction: float = 0.04
    seed: int = 0

    def __post_init__(self):
        kind = str(self.kind).lower().replace("-", "").replace("_", "")
        kind = {"random": RANDOM2D, "random2d": RANDOM2D, "poisson": POISSON, "radial": RADIAL}.get(kind)
        if kind is None:
            raise ValueError(f"unknown pattern kind {self.kind!r}; choose from {KINDS}")
        object.__setattr__(self, "kind", kind)
        if not self.target_R > 1:
            raise ValueError("target_R must exceed 1")
        if not 0 <= self.center_fraction < 1:
            raise ValueError("center_fraction must lie in [0, 1)")


def center_region(height, width, center_fraction):
    """Boolean mask of the fully-sampled central square."""
    mask = np.zeros((height, width), dtype=bool)
    ch = int(round(center_fraction * height))
    cw = int(round(center_fraction * width))
    if ch and cw:
        r0 = height // 2 - ch // 2
        c0 = width // 2 - cw // 2
        mask[r0:r0 + ch, c0:c0 + cw] = True
    return mask


def _budget(spec, height, width, center):
    target = height * width / spec.target_R
    n_center = int(center.sum())
    if n_center > target * (1 + TOLERANCE[spec.kind]):
        raise PatternError(
            f"center region alone holds {n_center} samples, more than the budget of "
            f"{target:.0f} for R={spec.target_R}; lower center_fraction or R"
        )
    return target


def _within(spec, mask):
    af = mask.size / mask.sum()
    return abs(af / spec.target_R - 1) <= TOLERANCE[spec.kind]


def random2d(spec, height, width):
    center = center_region(height, width, spec.center_fraction)
    target = _budget(spec, height, width, center)
    u = np.random.default_rng(spec.seed).random((height, width))
    u[center] = -1.0  # always selected
    lo, hi = 0.0, 1.0
    for _ in range(60):
        p = 0.5 * (lo + hi)
        mask = u < p
        if _within(spec, mask):
            return mask
        if mask.sum() > target:
            hi = p
        else:
            lo = p
    raise PatternError(f"random sampling could not reach R={spec.target_R} on a {height}x{width} grid")


def radius_profile(height, width, r0, core=0.3):
    """Variable-density disc radius; grows linearly from ``core * r0`` at the
    k-space centre to ``r0`` at the corners."""
    yy, xx = np.mgrid[0:height, 0:width]
    d = np.hypot(yy - height // 2, xx - width // 2)
    return r0 * (core + (1 - core) * d / d.max())


@numba.njit(cache=True)
def _dart_throw(order_r, order_c, radius, height, width, rmax):
    accepted = np.zeros((height, width), dtype=np.bool_)
    for n in range(order_r.shape[0]):
        r = order_r[n]
        c = order_c[n]
        rad = radius[r, c]
        rad2 = rad * rad
        reach = int(math.ceil(rad))
        if reach > rmax:
            reach = rmax
        ok = True
        for dr in range(-reach, reach + 1):
            rr = r + dr
            if rr < 0 or rr >= height:
                continue
            for dc in range(-reach, reach + 1):
                cc = c + dc
                if cc < 0 or cc >= width:
                    continue
                if accepted[rr, cc] and dr * dr + dc * dc < rad2:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            accepted[r, c] = True
    return accepted


def poisson_points(height, width, r0, exclude, seed, core=0.3):
    """Dart throwing in a seeded random order; a candidate is kept only if no
    earlier kept point lies strictly inside its local radius."""
    rng = np.random.default_rng(seed)
    rows, cols = np.nonzero(~exclude)
    perm = rng.permutation(rows.size)
    radius = radius_profile(height, width, r0, core)
    rmax = int(math.ceil(radius.max()))
    return _dart_throw(rows[perm], cols[perm], radius, height, width, rmax)


def poisson(spec, height, width):
    center = center_region(height, width, spec.center_fraction)
    target = _budget(spec, height, width, center)
    best = None
    lo, hi = 0.5, float(max(height, width))
    for _ in range(60):
        r0 = math.sqrt(lo * hi)
        mask = poisson_points(height, width, r0, center, spec.seed) | center
        if best is None or abs(mask.sum() - target) < abs(best.sum() - target):
            best = mask
        if _within(spec, mask):
            return mask
        if mask.sum() > target:
            lo = r0
        else:
            hi = r0
        if hi / lo < 1 + 1e-6:
            break
    raise PatternError(
        f"Poisson sampling could not reach R={spec.target_R} within "
        f"{TOLERANCE[POISSON]:.0%} (closest R={best.size / best.sum():.3f})"
    )


def spoke_pixels(height, width, angle):
    """Pixels of one ray from the centre pixel to the grid edge."""
    cy, cx = height // 2, width // 2
    length = math.hypot(height, width)
    s = np.arange(0.0, length, 0.5)
    r = np.round(cy + s * math.sin(angle)).astype(int)
    c = np.round(cx + s * math.cos(angle)).astype(int)
    keep = (r >= 0) & (r < height) & (c >= 0) & (c < width)
    return r[keep], c[keep]


def radial_mask(height, width, n_spokes, offset=0.0):
    mask = np.zeros((height, width), dtype=bool)
    for i in range(n_spokes):
        r, c = spoke_pixels(height, width, offset + 2 * math.pi * i / n_spokes)
        mask[r, c] = True
    return mask


def radial_search(spec, height, width):
    """Return ``(mask, n_spokes, offset)`` for the spoke count closest to the
    target; the angular offset is drawn from the pattern seed."""
    center = center_region(height, width, spec.center_fraction)
    target = _budget(spec, height, width, center)
    offset = float(np.random.default_rng(spec.seed).uniform(0, 2 * math.pi))
    best, best_n = None, 0
    for n in range(1, 8 * (height + width)):
        mask = radial_mask(height, width, n, offset) | center
        if best is None or abs(mask.sum() - target) < abs(best.sum() - target):
            best, best_n = mask, n
        if mask.sum() > target * (1 + TOLERANCE[RADIAL]):
            break
    if not _within(spec, best):
        raise PatternError(
            f"radial sampling could not reach R={spec.target_R} within "
            f"{TOLERANCE[RADIAL]:.0%} (closest R={best.size / best.sum():.3f})"
        )
    return best, best_n, offset


def radial(spec, height, width):
    return radial_search(spec, height, width)[0]


def generate_pattern(spec, height, width):
    """Binary sampling mask of shape ``(height, width)`` for ``spec``."""
    if height < 2 or width < 2:
        raise ValueError("pattern grids need at least 2 samples per axis")
    builders = {RANDOM2D: random2d, POISSON: poisson, RADIAL: radial}
    mask = builders[spec.kind](spec, height, width)
    if not mask.any():
        raise PatternError("generated pattern is empty")
    return mask
