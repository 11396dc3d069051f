"""Adaptive-mask guided k-space diffusion reconstruction.

The subpackages mirror the reconstruction pipeline: centred transforms and
sampling (:mod:`kspace`, :mod:`patterns`), wavelet band filters
(:mod:`wavelets`), adaptive masks and channel stacking (:mod:`masks`,
:mod:`stack`), the VE-SDE score machinery (:mod:`sde`, :mod:`denoiser`),
the closed-loop solver (:mod:`recon`) and evaluation (:mod:`metrics`).
"""

__version__ = "0.1.0"

from .kspace import Measurement, acceleration_factor, apply_sampling, fft2c, ifft2c, zero_filled
from .masks import AdaptiveMask, HybridMaskSet, MaskRanges, ThresholdRange, apply_mask, generate_masks, refresh_masks
from .metrics import MetricsRow, evaluate
from .patterns import PatternSpec, generate_pattern
from .phantoms import Dataset, augment, make_phantom
from .recon import ReconConfig, data_consistency, masked_model_update, reconstruct, surrogate_score
from .sde import NoiseSchedule, analytic_gaussian_score, corrector_step, dsm_loss, perturb, predictor_step
from .stack import ChannelLayout, StackedTensor, channel_mean, stack_hybrid, unstack
from .wavelets import WaveletSpec, dwt2, highpass, idwt2, lowpass
