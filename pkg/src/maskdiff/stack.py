"""Hybrid multi-channel stacking of masked k-space.

A stacked tensor is a real array of shape ``(2 * (n_high + 1), H, W)``: one
complex channel per mask, each split into a real plane followed by an
imaginary plane. The low-select channel sits before, between, or after the
high-select channels according to a :class:`ChannelLayout`.
"""

from dataclasses import dataclass

import numpy as np

from .masks import HybridMaskSet

BEFORE = "before"
MIDDLE = "middle"
AFTER = "after"


@dataclass(frozen=True)
class ChannelLayout:
    low_slot: str = MIDDLE
    n_high: int = 2

    def __post_init__(self):
        if self.low_slot not in (BEFORE, MIDDLE, AFTER):
            raise ValueError(f"low_slot must be one of before/middle/after, got {self.low_slot!r}")
        if int(self.n_high) < 1:
            raise ValueError("n_high must be >= 1")
        object.__setattr__(self, "n_high", int(self.n_high))

    @property
    def n_complex(self):
        return self.n_high + 1

    @property
    def n_planes(self):
        return 2 * (self.n_high + 1)

    @property
    def low_index(self):
        if self.low_slot == BEFORE:
            return 0
        if self.low_slot == AFTER:
            return self.n_high
        return (self.n_high + 1) // 2

    def order(self):
        """Channel labels in stacking order, e.g. ``('H1', 'L', 'H2')``."""
        labels = [f"H{i + 1}" for i in range(self.n_high)]
        labels.insert(self.low_index, "L")
        return tuple(labels)

    def masks_in_order(self, masks):
        """Mask grids matching :meth:`order` for a hybrid mask set."""
        if masks.n_high != self.n_high:
            raise ValueError(f"layout expects {self.n_high} high masks, got {masks.n_high}")
        grids = [m.grid for m in masks.highs]
        grids.insert(self.low_index, masks.low.grid)
        return np.stack(grids)


def layout_d1(n_high=2):
    """``{H1, L, H2}``-style ordering (low channel in the middle)."""
    return ChannelLayout(MIDDLE, n_high)


def layout_d2(n_high=2):
    """``{L, H1, H2}``-style ordering (low channel first)."""
    return ChannelLayout(BEFORE, n_high)


@dataclass
class StackedTensor:
    channels: np.ndarray
    layout: ChannelLayout

    def __post_init__(self):
        ch = np.asarray(self.channels, dtype=np.float64)
        if ch.ndim != 3 or ch.shape[0] != self.layout.n_planes:
            raise ValueError(
                f"expected ({self.layout.n_planes}, H, W) planes for {self.layout}, got {ch.shape}"
            )
        if not np.all(np.isfinite(ch)):
            raise ValueError("stacked tensor contains non-finite values")
        self.channels = ch

    @property
    def shape(self):
        return self.channels.shape

    def complex_channels(self):
        """``(n_high + 1, H, W)`` complex view in layout order."""
        return planes_to_complex(self.channels)


def split_complex(k):
    k = np.asarray(k)
    return np.real(k).astype(np.float64), np.imag(k).astype(np.float64)


def merge_complex(re, im):
    re, im = np.asarray(re, dtype=np.float64), np.asarray(im, dtype=np.float64)
    if re.shape != im.shape:
        raise ValueError(f"real shape {re.shape} != imaginary shape {im.shape}")
    out = np.empty(re.shape, dtype=np.complex128)
    out.real = re
    out.imag = im
    return out


def complex_to_planes(cplx):
    """``(C, H, W)`` complex -> ``(2C, H, W)`` real, real/imag interleaved."""
    cplx = np.asarray(cplx)
    out = np.empty((2 * cplx.shape[0],) + cplx.shape[1:], dtype=np.float64)
    out[0::2] = cplx.real
    out[1::2] = cplx.imag
    return out


def planes_to_complex(planes):
    planes = np.asarray(planes)
    if planes.shape[0] % 2:
        raise ValueError("plane count must be even")
    return merge_complex(planes[0::2], planes[1::2])


def stack_hybrid(k, masks: HybridMaskSet, layout: ChannelLayout):
    """Mask ``k`` with every mask of the set and stack the channels."""
    grids = layout.masks_in_order(masks)
    k = np.asarray(k, dtype=np.complex128)
    if k.shape != grids.shape[1:]:
        raise ValueError(f"k shape {k.shape} != mask shape {grids.shape[1:]}")
    return StackedTensor(complex_to_planes(np.where(grids, k[None], 0)), layout)


def replicate(k, layout: ChannelLayout):
    """Stack unmasked copies of ``k`` in every channel."""
    k = np.asarray(k, dtype=np.complex128)
    return StackedTensor(complex_to_planes(np.broadcast_to(k, (layout.n_complex,) + k.shape)), layout)


def unstack(t: StackedTensor):
    """List of complex channels in layout order."""
    return list(t.complex_channels())


def channel_mean(t: StackedTensor):
    """Plain arithmetic mean of the complex channels."""
    return t.complex_channels().mean(axis=0)


def mask_weighted_mean(t: StackedTensor, masks: HybridMaskSet):
    """Mean over the channels whose mask covers each pixel.

    Pixels covered by no mask fall back to the plain mean.
    """
    cplx = t.complex_channels()
    w = t.layout.masks_in_order(masks).astype(np.float64)
    cover = w.sum(axis=0)
    weighted = (w * cplx).sum(axis=0) / np.maximum(cover, 1)
    return np.where(cover > 0, weighted, cplx.mean(axis=0))
