"""
Closed-loop reconstruction
==========================

Shepp-Logan at 64x64, 2D random sampling at R = 4. Each outer iteration
runs two score models on the masked hybrid tensor, writes their outputs
back inside the mask supports, collapses the channels, enforces the
measured samples and re-derives the masks.

No trained network is needed here: the prior is an analytic Gaussian score
centred on the true k-space. The point is to watch the loop mechanics and
the convergence curve.
"""

import matplotlib.pyplot as plt
import numpy as np

from maskdiff import (
    PatternSpec,
    ReconConfig,
    apply_sampling,
    evaluate,
    fft2c,
    generate_pattern,
    make_phantom,
    reconstruct,
    surrogate_score,
    zero_filled,
)

img = make_phantom("shepp_logan", 64)
k = fft2c(img)
mask = generate_pattern(PatternSpec("random2d", 4, seed=0), 64, 64)
meas = apply_sampling(k, mask)

cfg = ReconConfig(outer_steps=200, seed=0)
models = (surrogate_score(k, cfg.layout_d1), surrogate_score(k, cfg.layout_d2))
k_final, image, state = reconstruct(meas, models, cfg, reference=img)

zf = zero_filled(meas)
print("zero-filled    ", evaluate(zf, img).cell())
print("reconstruction ", evaluate(image, img).cell())

# %%
# The channels start from sigma_max noise, so PSNR is very negative until
# the noise scale comes down, then rises quickly and settles.
it = [i for i, _ in state.trace]
psnr = [m.psnr for _, m in state.trace]
ssim = [m.ssim for _, m in state.trace]

fig, ax = plt.subplots(1, 4, figsize=(15, 3.5))
ax[0].imshow(np.abs(zf), cmap="gray")
ax[0].set_title("zero-filled")
ax[1].imshow(np.abs(image), cmap="gray")
ax[1].set_title("reconstruction")
for a in ax[:2]:
    a.axis("off")
ax[2].plot(it, psnr)
ax[2].set_ylim(0, max(psnr) + 2)
ax[2].set_xlabel("iteration")
ax[2].set_title("PSNR (dB)")
ax[3].plot(it, ssim)
ax[3].set_xlabel("iteration")
ax[3].set_title("SSIM")
plt.tight_layout()
plt.show()
