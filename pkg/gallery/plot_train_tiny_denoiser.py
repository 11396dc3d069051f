"""
Training the tiny score model
=============================

The learned prior is a three-layer periodic CNN trained by denoising score
matching on hybrid stacked tensors built from synthetic phantoms. Here a
short run on 40 tensors shows the loss coming down; the full-size run in
the test suite uses 200 tensors and 2000 steps.
"""

import matplotlib.pyplot as plt
import numpy as np

from maskdiff import NoiseSchedule, fft2c, generate_masks, make_phantom, stack_hybrid
from maskdiff.denoiser import TinyDenoiser, TrainingConfig, evaluation_loss, train
from maskdiff.stack import layout_d1

schedule = NoiseSchedule()
data = []
for i in range(40):
    k = fft2c(make_phantom("gaussian_blobs" if i % 2 else "smooth_random", 32, seed=i))
    data.append(stack_hybrid(k, generate_masks(k), layout_d1()).channels)

model = TinyDenoiser(channels=6, hidden=16, seed=0, schedule=schedule)
before = evaluation_loss(model, data[:16], schedule)
model, losses = train(model, data, TrainingConfig(learning_rate=3e-4, steps=400), schedule, seed=0)
after = evaluation_loss(model, data[:16], schedule)
print(f"held-out dsm loss {before:.1f} -> {after:.1f}")

# %%
# Per-step losses are noisy because every step draws a fresh noise level;
# a running mean shows the trend.
run = np.convolve(losses, np.ones(25) / 25, mode="valid")
plt.figure(figsize=(6, 3.5))
plt.semilogy(losses, alpha=0.3, label="per step")
plt.semilogy(np.arange(24, len(losses)), run, label="running mean")
plt.xlabel("step")
plt.ylabel("dsm loss")
plt.legend()
plt.tight_layout()
plt.show()
