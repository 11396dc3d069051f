"""Closed-loop mask-guided diffusion reconstruction.

Each outer iteration runs two cascaded score models over the hybrid stacked
tensor. Every model sees the current channels masked by their adaptive masks,
takes one reverse-diffusion predictor step plus ``corrector_loops`` Langevin
corrections, and its output replaces the channels only inside the mask
support. The channels are then collapsed to one k-space estimate, made
consistent with the measurement, and the masks are re-derived from that
estimate for the next iteration.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .kspace import Measurement, as_grid, ifft2c
from .masks import MaskRanges, generate_masks, refresh_masks
from .metrics import evaluate
from .sde import AnalyticGaussianScore, NoiseSchedule, langevin_step, reverse_diffusion_step
from .stack import (
    ChannelLayout,
    StackedTensor,
    complex_to_planes,
    layout_d1,
    layout_d2,
    mask_weighted_mean,
    planes_to_complex,
    replicate,
)
from .wavelets import WaveletSpec

MEAN = "mean"
MASK_WEIGHTED = "mask_weighted"
PER_ITERATION = "per_iteration"
FINAL = "final"


class ReconError(RuntimeError):
    pass


@dataclass(frozen=True)
class ReconConfig:
    """Knobs of the iterative reconstruction.

    ``dc_mode="per_iteration"`` enforces data consistency after every outer
    iteration and restarts all channels from the consistent estimate;
    ``"final"`` lets the channels evolve freely and applies it once at the end.
    """

    mu: float = 0.0
    outer_steps: int = 200
    corrector_loops: int = 1
    snr: float = 0.16
    schedule: NoiseSchedule = NoiseSchedule()
    wavelet: WaveletSpec = WaveletSpec()
    mask_ranges: MaskRanges = MaskRanges()
    layout_d1: ChannelLayout = layout_d1()
    layout_d2: ChannelLayout = layout_d2()
    recombine: str = MEAN
    dc_mode: str = PER_ITERATION
    seed: int = 0

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError("mu must be nonnegative")
        if self.outer_steps < 1 or self.corrector_loops < 1:
            raise ValueError("outer_steps and corrector_loops must be >= 1")
        if self.snr <= 0:
            raise ValueError("snr must be positive")
        if self.recombine not in (MEAN, MASK_WEIGHTED):
            raise ValueError(f"recombine must be {MEAN!r} or {MASK_WEIGHTED!r}")
        if self.dc_mode not in (PER_ITERATION, FINAL):
            raise ValueError(f"dc_mode must be {PER_ITERATION!r} or {FINAL!r}")
        n = len(self.mask_ranges.highs)
        if self.layout_d1.n_high != n or self.layout_d2.n_high != n:
            raise ValueError(f"layouts must describe {n} high channels to match the mask ranges")

    @classmethod
    def for_channels(cls, n_channels, **kw):
        """Config with ``n_channels = 2 * (n_high + 1)`` stacked planes."""
        if n_channels < 4 or n_channels % 2:
            raise ValueError("channel count must be an even number >= 4")
        n_high = n_channels // 2 - 1
        ranges = kw.pop("mask_ranges", None) or MaskRanges.with_n_high(n_high)
        return cls(mask_ranges=ranges, layout_d1=layout_d1(n_high), layout_d2=layout_d2(n_high), **kw)

    def sigma_levels(self):
        """``2 * outer_steps + 1`` descending (t, sigma) pairs drawn from the
        discrete schedule; iteration ``i`` uses pairs ``2i .. 2i + 2``."""
        n = self.schedule.n_scales
        levels = np.rint(np.linspace(n, 1, 2 * self.outer_steps + 1)).astype(int)
        return [(self.schedule.level_time(j), self.schedule.level_sigma(j)) for j in levels]


@dataclass
class ReconState:
    tensor: StackedTensor
    masks: object
    iteration: int = 0
    trace: list = field(default_factory=list)


def masked_model_update(k, k_model, m):
    """Replace ``k`` by ``k_model`` inside the support of binary mask ``m``.

    Equal to ``k + m^H (k_model - m * k)`` for a real binary (self-adjoint)
    mask; written as a select so positions outside the support are untouched
    bit for bit and positions inside take ``k_model`` exactly.
    """
    k = np.asarray(k)
    k_model = np.asarray(k_model)
    grid = np.asarray(getattr(m, "grid", m))
    if k.shape != k_model.shape or k.shape[-2:] != grid.shape[-2:]:
        raise ValueError(f"shape mismatch: k {k.shape}, model {k_model.shape}, mask {grid.shape}")
    if grid.dtype != bool:
        if not np.all(np.isin(grid, (0, 1))):
            raise ValueError("mask must be binary")
        grid = grid.astype(bool)
    return np.where(grid, k_model, k)


def data_consistency(k_est, meas: Measurement, mu=0.0):
    """Minimizer of ``||m k - y||^2 + mu ||k - k_est||^2``.

    Sampled positions become ``(y + mu * k_est) / (1 + mu)``; unsampled
    positions keep ``k_est``. With ``mu = 0`` sampled positions equal ``y``.
    """
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    k_est = np.asarray(k_est, dtype=np.complex128)
    if k_est.shape != meas.shape:
        raise ValueError(f"k shape {k_est.shape} != measurement shape {meas.shape}")
    if mu == 0:
        return np.where(meas.mask, meas.y, k_est)
    return np.where(meas.mask, (meas.y + mu * k_est) / (1.0 + mu), k_est)


def dc_objective(k, k_prev, meas, mu):
    return float(np.sum(np.abs(meas.mask * k - meas.y) ** 2) + mu * np.sum(np.abs(k - k_prev) ** 2))


def surrogate_score(reference_k, layout, base_var=1e-4, schedule=NoiseSchedule()):
    """Analytic Gaussian score centred on the reference k-space in every channel."""
    mean = replicate(as_grid(reference_k, "reference k-space"), layout).channels
    return AnalyticGaussianScore(mean, base_var, schedule)


def _check_model(model, layout, shape):
    ch = getattr(model, "channels", None)
    if ch is not None and ch != layout.n_planes:
        raise ValueError(f"model expects {ch} planes but layout {layout.order()} has {layout.n_planes}")
    mean = getattr(model, "mean", None)
    if mean is not None and mean.shape != (layout.n_planes,) + shape:
        raise ValueError(f"analytic score mean has shape {mean.shape}, expected {(layout.n_planes,) + shape}")


def _cascade_step(x, grids, model, t_hi, s_hi, t_lo, s_lo, cfg, rng):
    inp = complex_to_planes(np.where(grids, x, 0))
    out = reverse_diffusion_step(inp, s_hi, s_lo, t_hi, model, rng)
    for _ in range(cfg.corrector_loops):
        out = langevin_step(out, t_lo, model, cfg.snr, rng)
    return masked_model_update(x, planes_to_complex(out), grids)


def _permutation(src, dst):
    """Indices ``p`` such that ``x_src[p]`` is ordered like ``dst``."""
    a, b = src.order(), dst.order()
    return [a.index(label) for label in b]


def _collapse(x, masks, cfg):
    if cfg.recombine == MASK_WEIGHTED:
        return mask_weighted_mean(StackedTensor(complex_to_planes(x), cfg.layout_d1), masks)
    return x.mean(axis=0)


def reconstruct(meas, models, cfg=ReconConfig(), reference=None, callback=None):
    """Run the closed-loop reconstruction.

    ``models`` is ``(d1, d2)``; pass the same model twice to share one prior.
    ``reference`` is an optional ground-truth image for the per-iteration
    metrics trace. Returns ``(k_final, image, state)``.
    """
    d1, d2 = models
    shape = meas.shape
    _check_model(d1, cfg.layout_d1, shape)
    _check_model(d2, cfg.layout_d2, shape)
    rng = np.random.default_rng(cfg.seed)
    to_d2 = _permutation(cfg.layout_d1, cfg.layout_d2)
    to_d1 = _permutation(cfg.layout_d2, cfg.layout_d1)

    masks = generate_masks(meas.y, cfg.wavelet, cfg.mask_ranges.low, cfg.mask_ranges.highs)
    n_c = cfg.layout_d1.n_complex
    x = planes_to_complex(cfg.schedule.sigma_max * rng.standard_normal((2 * n_c,) + shape))
    levels = cfg.sigma_levels()
    trace = []

    for it in range(cfg.outer_steps):
        (ta, sa), (tb, sb), (tc, sc) = levels[2 * it:2 * it + 3]
        g1 = cfg.layout_d1.masks_in_order(masks)
        x = _cascade_step(x, g1, d1, ta, sa, tb, sb, cfg, rng)
        x2 = _cascade_step(x[to_d2], g1[to_d2], d2, tb, sb, tc, sc, cfg, rng)
        x = x2[to_d1]

        k = _collapse(x, masks, cfg)
        k_dc = data_consistency(k, meas, cfg.mu)
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(k_dc))):
            raise ReconError(f"non-finite state at outer iteration {it + 1}")
        if cfg.dc_mode == PER_ITERATION:
            k = k_dc
            x = np.broadcast_to(k, x.shape).copy()
        if reference is not None:
            trace.append((it + 1, evaluate(ifft2c(k_dc), reference)))
        masks = refresh_masks(k, cfg.wavelet, cfg.mask_ranges)
        if callback is not None:
            callback(it + 1, k_dc)

    k_final = data_consistency(_collapse(x, masks, cfg), meas, cfg.mu)
    state = ReconState(StackedTensor(complex_to_planes(x), cfg.layout_d1), masks, cfg.outer_steps, trace)
    return k_final, ifft2c(k_final), state


def trace_rows(trace):
    """Rows ``(iteration, psnr, ssim, mse)`` for CSV output."""
    return [(i, m.psnr, m.ssim, m.mse) for i, m in trace]


def with_seed(cfg, seed):
    return replace(cfg, seed=seed)
