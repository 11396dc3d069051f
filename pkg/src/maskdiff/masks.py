"""Adaptive frequency-selection masks.

A low-select mask keeps k-space positions whose low-band residual
``|k - highpass(k)|`` falls in a threshold range. A high-select mask does the
same with the high-band residual ``|k - lowpass(k)|``. Thresholds are either
absolute values or quantiles of the residual map; quantile thresholds adapt to
the current k-space and are invariant to a positive rescaling of it.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .kspace import as_grid, as_mask
from .wavelets import WaveletSpec, highpass, lowpass

ABSOLUTE = "absolute"
QUANTILE = "quantile"
LOW = "low"
HIGH = "high"


TIE_RTOL = 1e-12


class EmptyMaskWarning(UserWarning):
    """A generated mask selected no positions."""


@dataclass(frozen=True)
class ThresholdRange:
    """Closed interval ``[lo, hi]`` applied to a residual map.

    In ``"quantile"`` mode both bounds lie in [0, 1] and are resolved against
    the residual distribution; in ``"absolute"`` mode ``hi`` may be ``inf``.
    """

    lo: float = 0.0
    hi: float = math.inf
    mode: str = ABSOLUTE

    def __post_init__(self):
        mode = str(self.mode).lower()
        if mode not in (ABSOLUTE, QUANTILE):
            raise ValueError(f"unknown threshold mode {self.mode!r}")
        object.__setattr__(self, "mode", mode)
        lo, hi = float(self.lo), float(self.hi)
        if math.isnan(lo) or math.isnan(hi):
            raise ValueError("threshold bounds must not be NaN")
        if lo < 0:
            raise ValueError("lower threshold must be nonnegative")
        if lo > hi:
            raise ValueError(f"lower threshold {lo} exceeds upper threshold {hi}")
        if mode == QUANTILE and hi > 1:
            raise ValueError("quantile bounds must lie in [0, 1]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def quantile(cls, lo, hi=1.0):
        return cls(lo, hi, QUANTILE)

    def resolve(self, values):
        """Absolute ``(lo, hi)`` bounds for this range on ``values``.

        Quantile bounds are order statistics: ``lo`` keeps the top
        ``ceil(n * (1 - lo))`` values and ``hi`` keeps the bottom
        ``ceil(n * hi)``, so ``[0.5, 1]`` picks exactly ``ceil(n / 2)``
        distinct values.
        """
        if self.mode == ABSOLUTE:
            return self.lo, self.hi
        v = np.sort(np.ravel(values))
        n = v.size
        n_top = math.ceil(n * (1.0 - self.lo) - 1e-9)
        n_bottom = math.ceil(n * self.hi - 1e-9)
        lo = v[n - n_top] if n_top > 0 else math.inf
        hi = v[n_bottom - 1] if n_bottom > 0 else -math.inf
        # widen by a few ulps of the largest value so exact ties that rounding
        # has split (e.g. after a non-power-of-two rescale) stay together
        slack = TIE_RTOL * float(v[-1]) if n else 0.0
        return float(lo) - slack, float(hi) + slack


@dataclass(frozen=True)
class AdaptiveMask:
    kind: str
    grid: np.ndarray
    source_thresholds: ThresholdRange
    resolved: tuple = (0.0, math.inf)

    @property
    def popcount(self):
        return int(self.grid.sum())


@dataclass(frozen=True)
class HybridMaskSet:
    """One low-select mask and ``N >= 1`` high-select masks of one shape."""

    low: AdaptiveMask
    highs: tuple

    def __post_init__(self):
        if len(self.highs) < 1:
            raise ValueError("a hybrid mask set needs at least one high mask")
        object.__setattr__(self, "highs", tuple(self.highs))
        shape = self.low.grid.shape
        if any(m.grid.shape != shape for m in self.highs):
            raise ValueError("all masks in a hybrid set must share one shape")

    @property
    def n_high(self):
        return len(self.highs)

    @property
    def shape(self):
        return self.low.grid.shape

    def same_as(self, other):
        return np.array_equal(self.low.grid, other.low.grid) and len(self.highs) == len(
            other.highs
        ) and all(np.array_equal(a.grid, b.grid) for a, b in zip(self.highs, other.highs))


def default_high_ranges(n_high=2):
    """Quantile ranges ``[1 - 2**-i, 1]`` for ``i = 1..n_high``; the default
    pair is ``[0.5, 1]`` and ``[0.75, 1]``."""
    return tuple(ThresholdRange.quantile(1.0 - 0.5**i, 1.0) for i in range(1, n_high + 1))


@dataclass(frozen=True)
class MaskRanges:
    """Threshold configuration for a whole hybrid mask set."""

    low: ThresholdRange = ThresholdRange.quantile(0.70, 1.0)
    highs: tuple = field(default_factory=default_high_ranges)

    def __post_init__(self):
        if len(self.highs) < 1:
            raise ValueError("at least one high threshold range is required")
        object.__setattr__(self, "highs", tuple(self.highs))

    @classmethod
    def with_n_high(cls, n_high, low=None):
        return cls(low if low is not None else cls.low, default_high_ranges(n_high))


def frequency_residuals(k, spec=WaveletSpec()):
    """Return ``(low_res, high_res) = (|k - H(k)|, |k - L(k)|)``."""
    k = as_grid(k, "k-space")
    low_res = np.abs(k - highpass(k, spec))
    high_res = np.abs(k - lowpass(k, spec))
    return low_res, high_res


def _select(values, rng, kind):
    lo, hi = rng.resolve(values)
    grid = (values >= lo) & (values <= hi)
    if not grid.any():
        warnings.warn(
            f"{kind} mask is empty for thresholds {rng} (resolved to [{lo:.4g}, {hi:.4g}])",
            EmptyMaskWarning,
            stacklevel=3,
        )
    return AdaptiveMask(kind, grid, rng, (lo, hi))


def generate_masks(k, spec=WaveletSpec(), low_range=None, high_ranges=None):
    """Build a :class:`HybridMaskSet` from thresholded wavelet residuals of ``k``.

    Empty masks are allowed and raise :class:`EmptyMaskWarning`.
    """
    defaults = MaskRanges()
    low_range = defaults.low if low_range is None else low_range
    high_ranges = defaults.highs if high_ranges is None else tuple(high_ranges)
    if len(high_ranges) < 1:
        raise ValueError("at least one high threshold range is required")
    low_res, high_res = frequency_residuals(k, spec)
    low = _select(low_res, low_range, LOW)
    highs = tuple(_select(high_res, r, HIGH) for r in high_ranges)
    return HybridMaskSet(low, highs)


def refresh_masks(current_k, spec=WaveletSpec(), ranges=MaskRanges()):
    """Re-derive the hybrid masks from the latest k-space estimate."""
    return generate_masks(current_k, spec, ranges.low, ranges.highs)


def apply_mask(k, m):
    """Elementwise product of a grid (or stack of grids) with a binary mask."""
    grid = m.grid if isinstance(m, AdaptiveMask) else as_mask(m)
    k = np.asarray(k)
    if k.shape[-2:] != grid.shape:
        raise ValueError(f"k shape {k.shape} does not match mask shape {grid.shape}")
    return np.where(grid, k, 0).astype(np.result_type(k.dtype, np.float64))
