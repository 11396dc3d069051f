"""PSNR, SSIM and MSE on magnitude images normalized to the reference peak."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

PSNR_CAP = 300.0
MSE_SCALE = 1e4  # tables report MSE in units of 1e-4


@dataclass(frozen=True)
class SSIMConfig:
    win_size: int = 11
    sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    data_range: float = 1.0


@dataclass(frozen=True)
class MetricsRow:
    psnr: float
    ssim: float
    mse: float

    def cell(self):
        """Table cell ``"PSNR/SSIM/MSE"`` with MSE scaled by 1e4."""
        return f"{self.psnr:.2f}/{self.ssim:.4f}/{self.mse * MSE_SCALE:.3f}"


def normalize_pair(recon, reference):
    recon = np.abs(np.asarray(recon))
    reference = np.abs(np.asarray(reference))
    if recon.shape != reference.shape:
        raise ValueError(f"shape mismatch: {recon.shape} vs {reference.shape}")
    peak = reference.max()
    if not peak > 0:
        raise ValueError("reference image is all zeros")
    return recon / peak, reference / peak


def mse(a, b):
    return float(np.mean(np.square(np.asarray(a, float) - np.asarray(b, float))))


def psnr_from_mse(m, data_range=1.0):
    if m == 0:
        return PSNR_CAP
    return min(PSNR_CAP, 10.0 * math.log10(data_range**2 / m))


def _gaussian_kernel(win_size, sigma):
    r = win_size // 2
    x = np.arange(-r, r + 1)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def _filter(img, kernel):
    out = correlate1d(img, kernel, axis=0, mode="reflect")
    return correlate1d(out, kernel, axis=1, mode="reflect")


def ssim(a, b, cfg=SSIMConfig()):
    """Mean structural similarity with a Gaussian window.

    Local statistics use population (not sample) covariance; the mean is taken
    over pixels at least ``win_size // 2`` from the border.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    k = _gaussian_kernel(cfg.win_size, cfg.sigma)
    ux, uy = _filter(a, k), _filter(b, k)
    vx = _filter(a * a, k) - ux * ux
    vy = _filter(b * b, k) - uy * uy
    vxy = _filter(a * b, k) - ux * uy
    c1 = (cfg.k1 * cfg.data_range) ** 2
    c2 = (cfg.k2 * cfg.data_range) ** 2
    s = ((2 * ux * uy + c1) * (2 * vxy + c2)) / ((ux**2 + uy**2 + c1) * (vx + vy + c2))
    pad = (cfg.win_size - 1) // 2
    if min(a.shape) > 2 * pad:
        s = s[pad:-pad, pad:-pad]
    return float(s.mean())


def evaluate(recon, reference, ssim_cfg=SSIMConfig()):
    """Metrics of ``recon`` against ``reference`` (complex or real)."""
    r, ref = normalize_pair(recon, reference)
    m = mse(r, ref)
    return MetricsRow(psnr_from_mse(m), ssim(r, ref, ssim_cfg), m)


def format_table(header, rows):
    """Aligned plain-text table from a header and rows of strings."""
    cells = [list(map(str, header))] + [list(map(str, r)) for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in cells]
    return "\n".join(lines) + "\n"
