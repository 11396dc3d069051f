"""
Adaptive masks from wavelet residuals
=====================================

The masks that steer the diffusion prior are not fixed sampling patterns.
They are re-derived from the k-space itself: a wavelet high-pass and
low-pass split gives two residual maps, and quantile thresholds on those
maps pick one low-frequency mask and a few high-frequency masks.
"""

import matplotlib.pyplot as plt
import numpy as np

from maskdiff import MaskRanges, WaveletSpec, fft2c, generate_masks, make_phantom
from maskdiff.masks import frequency_residuals

img = make_phantom("shepp_logan", 64)
k = fft2c(img)
spec = WaveletSpec("haar", levels=2)

# %%
# ``low_res = |k - H(k)|`` keeps the coarse wavelet content of k-space,
# ``high_res = |k - L(k)|`` keeps the detail bands.
low_res, high_res = frequency_residuals(k, spec)

# %%
# The default ranges keep the top 30% of ``low_res`` for the low mask and
# the top 50% / 25% of ``high_res`` for two high masks.
ranges = MaskRanges()
masks = generate_masks(k, spec, ranges.low, ranges.highs)
for name, m in [("M_L", masks.low), ("M_H1", masks.highs[0]), ("M_H2", masks.highs[1])]:
    print(f"{name}: {m.popcount} of {m.grid.size} positions, thresholds {m.resolved[0]:.3g}..{m.resolved[1]:.3g}")

fig, ax = plt.subplots(1, 5, figsize=(15, 3))
ax[0].imshow(np.log1p(low_res), cmap="magma")
ax[0].set_title("log low residual")
ax[1].imshow(np.log1p(high_res), cmap="magma")
ax[1].set_title("log high residual")
for a, (name, m) in zip(ax[2:], [("M_L", masks.low), ("M_H1", masks.highs[0]), ("M_H2", masks.highs[1])]):
    a.imshow(m.grid, cmap="gray")
    a.set_title(name)
for a in ax:
    a.axis("off")
plt.tight_layout()

# %%
# Quantile thresholds are scale free, so multiplying k-space by a constant
# leaves every mask unchanged.
print("same masks after scaling by 10:", generate_masks(10 * k, spec).same_as(generate_masks(k, spec)))

plt.show()
