"""Centered Fourier transforms, the undersampling forward model and the
zero-filled baseline.

Images and k-space grids are plain ``complex128`` numpy arrays of shape
``(H, W)``. Sampling masks are boolean arrays of the same shape. The DC
coefficient sits at ``(H // 2, W // 2)`` and both transforms use orthonormal
scaling, so ``ifft2c(fft2c(x)) == x`` and norms are preserved.
"""

from dataclasses import dataclass

import numpy as np


def as_grid(x, name="grid"):
    """Validate ``x`` as a finite 2D complex grid and return a complex128 copy."""
    arr = np.asarray(x)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be non-empty, got shape {arr.shape}")
    arr = arr.astype(np.complex128)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def as_mask(m, name="mask"):
    """Validate ``m`` as a binary 2D mask and return it as a bool array."""
    arr = np.asarray(m)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2D, got shape {arr.shape}")
    if arr.dtype != bool:
        if not np.all(np.isin(arr, (0, 1))):
            raise ValueError(f"{name} must be binary (entries in {{0, 1}})")
        arr = arr.astype(bool)
    return arr


def acceleration_factor(mask):
    """Ratio of grid size to number of sampled locations."""
    mask = as_mask(mask)
    n = int(mask.sum())
    if n == 0:
        raise ValueError("acceleration factor undefined for an empty mask")
    return mask.size / n


def fft2c(img):
    """Centered orthonormal 2D DFT (image -> k-space)."""
    img = as_grid(img, "image")
    if min(img.shape) < 2:
        raise ValueError("fft2c needs at least 2 samples per axis")
    return np.fft.fftshift(np.fft.fft2(np.fft.ifftshift(img), norm="ortho"))


def ifft2c(k):
    """Centered orthonormal inverse 2D DFT (k-space -> image)."""
    k = as_grid(k, "k-space")
    if min(k.shape) < 2:
        raise ValueError("ifft2c needs at least 2 samples per axis")
    return np.fft.fftshift(np.fft.ifft2(np.fft.ifftshift(k), norm="ortho"))


@dataclass(frozen=True)
class Measurement:
    """Undersampled k-space ``y`` with its sampling mask and noise level."""

    y: np.ndarray
    mask: np.ndarray
    noise_std: float = 0.0

    def __post_init__(self):
        y = as_grid(self.y, "y")
        mask = as_mask(self.mask)
        if y.shape != mask.shape:
            raise ValueError(f"y shape {y.shape} != mask shape {mask.shape}")
        if self.noise_std < 0:
            raise ValueError("noise_std must be nonnegative")
        if np.any(y[~mask] != 0):
            raise ValueError("y must be zero outside the sampling mask")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "mask", mask)

    @property
    def shape(self):
        return self.y.shape


def apply_sampling(k, mask, noise_std=0.0, seed=0):
    """Simulate an acquisition ``y = mask * (k + noise)``.

    The noise is circularly-symmetric complex Gaussian with total standard
    deviation ``noise_std`` (each of the real and imaginary parts has
    ``noise_std / sqrt(2)``), drawn from ``numpy.random.default_rng(seed)``.
    """
    k = as_grid(k, "k-space")
    mask = as_mask(mask)
    if k.shape != mask.shape:
        raise ValueError(f"k shape {k.shape} != mask shape {mask.shape}")
    if noise_std < 0:
        raise ValueError("noise_std must be nonnegative")
    y = k.copy()
    if noise_std > 0:
        rng = np.random.default_rng(seed)
        s = noise_std / np.sqrt(2.0)
        y = y + s * (rng.standard_normal(k.shape) + 1j * rng.standard_normal(k.shape))
    y[~mask] = 0
    return Measurement(y=y, mask=mask, noise_std=float(noise_std))


def zero_filled(meas):
    """Inverse transform of the measured k-space with zeros elsewhere."""
    return ifft2c(meas.y)
