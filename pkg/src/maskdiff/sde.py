"""Variance-exploding SDE machinery: noise schedule, forward perturbation,
denoising score matching, and predictor / corrector updates.

Score models are callables ``model(x, t)`` over real arrays shaped
``(C, H, W)`` or batched ``(B, C, H, W)`` (with ``t`` scalar or shape
``(B,)``). Norms used by the corrector step size are taken per sample over
the trailing three axes.
"""

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NoiseSchedule:
    """Geometric noise scale ``sigma(t) = sigma_min * (sigma_max / sigma_min) ** t``.

    ``n_scales`` discrete levels are placed uniformly in ``t``; level ``j``
    (1-based) has ``t_j = (j - 1) / (n_scales - 1)``.
    """

    sigma_min: float = 0.01
    sigma_max: float = 378.0
    n_scales: int = 1000

    def __post_init__(self):
        if not 0 < self.sigma_min < self.sigma_max:
            raise ValueError("need 0 < sigma_min < sigma_max")
        if int(self.n_scales) < 2:
            raise ValueError("n_scales must be >= 2")
        object.__setattr__(self, "n_scales", int(self.n_scales))

    def sigma(self, t):
        t_arr = np.asarray(t, dtype=np.float64)
        if np.any(t_arr < 0) or np.any(t_arr > 1) or np.any(np.isnan(t_arr)):
            raise ValueError(f"t must lie in [0, 1], got {t}")
        out = self.sigma_min * (self.sigma_max / self.sigma_min) ** t_arr
        return float(out) if out.ndim == 0 else out

    def level_time(self, j):
        if not 1 <= j <= self.n_scales:
            raise ValueError(f"level {j} outside 1..{self.n_scales}")
        return (j - 1) / (self.n_scales - 1)

    def level_sigma(self, j):
        return self.sigma(self.level_time(j))

    def times(self):
        return np.linspace(0.0, 1.0, self.n_scales)

    def sigmas(self):
        return self.sigma(self.times())


def sigma(schedule, t):
    return schedule.sigma(t)


def _rng(seed):
    return np.random.default_rng(seed)


def _per_sample(values, x):
    """Broadcast per-sample scalars against a ``(..., C, H, W)`` array."""
    values = np.asarray(values, dtype=np.float64)
    return values.reshape(values.shape + (1,) * (x.ndim - values.ndim))


def _sample_norm(a):
    return np.sqrt(np.sum(np.square(a), axis=(-3, -2, -1)))


def perturb(x0, t, schedule, seed=None):
    """Return ``(x0 + sigma(t) * Z, Z)`` with ``Z`` standard normal."""
    x0 = np.asarray(x0, dtype=np.float64)
    z = _rng(seed).standard_normal(x0.shape)
    s = schedule.sigma(t)
    return x0 + _per_sample(s, x0) * z, z


def conditional_score(x_t, x0, sigma_t):
    """Score of the VE perturbation kernel, ``-(x_t - x0) / sigma_t**2``."""
    return -(x_t - x0) / sigma_t**2


class ScoreModel:
    """Interface for score estimators.

    Subclasses implement :meth:`__call__`. Trainable models additionally
    implement ``forward`` (returning output and a cache), ``vjp`` and expose
    ``params``.
    """

    trainable = False

    def __init__(self, schedule=NoiseSchedule()):
        self.schedule = schedule

    def __call__(self, x, t):
        raise NotImplementedError


class AnalyticGaussianScore(ScoreModel):
    """Exact score of ``N(mean, base_var * I)`` perturbed by the VE kernel."""

    def __init__(self, mean, base_var, schedule=NoiseSchedule()):
        if base_var <= 0:
            raise ValueError("base_var must be positive")
        super().__init__(schedule)
        self.mean = np.asarray(mean, dtype=np.float64)
        self.base_var = float(base_var)

    def __call__(self, x, t):
        x = np.asarray(x, dtype=np.float64)
        var = self.base_var + np.square(self.schedule.sigma(t))
        return -(x - self.mean) / _per_sample(var, x)


def analytic_gaussian_score(mean, base_var, schedule=NoiseSchedule()):
    return AnalyticGaussianScore(mean, base_var, schedule)


def dsm_loss(model, batch, schedule, seed=None, gradients=False):
    """Denoising score matching loss with ``sigma(t)**2`` weighting.

    For each item a time ``t ~ U(0, 1)`` and noise ``Z`` are drawn; the target
    is ``-Z / sigma(t)`` and the item loss is ``sigma**2 * ||s - target||**2``
    summed over all elements. Returns ``(loss, grads)`` where ``loss`` is the
    batch mean and ``grads`` is a list matching ``model.params`` (or ``None``).
    """
    batch = np.asarray([np.asarray(getattr(b, "channels", b), dtype=np.float64) for b in batch])
    if batch.shape[0] == 0:
        raise ValueError("dsm_loss needs a non-empty batch")
    if gradients and not getattr(model, "trainable", False):
        raise TypeError("gradients requested from a non-trainable score model")
    rng = _rng(seed)
    t = rng.uniform(0.0, 1.0, size=batch.shape[0])
    x_t, z = perturb(batch, t, schedule, rng)
    s = _per_sample(schedule.sigma(t), batch)
    if gradients:
        out, cache = model.forward(x_t, t)
    else:
        out = model(x_t, t)
    resid = s * out + z  # sigma * (score - target)
    per_item = np.sum(np.square(resid), axis=(-3, -2, -1))
    loss = float(np.mean(per_item))
    if not gradients:
        return loss, None
    grad_out = 2.0 * s * resid / batch.shape[0]
    return loss, model.vjp(cache, grad_out)


def reverse_diffusion_step(x, sigma_hi, sigma_lo, t_hi, model, seed=None, noise=None):
    """One reverse-diffusion update from noise scale ``sigma_hi`` down to ``sigma_lo``."""
    x = np.asarray(x, dtype=np.float64)
    dvar = sigma_hi**2 - sigma_lo**2
    if dvar < 0:
        raise ValueError("predictor must move to a smaller noise scale")
    z = _rng(seed).standard_normal(x.shape) if noise is None else noise
    return x + dvar * model(x, t_hi) + math.sqrt(dvar) * z


def langevin_step(x, t, model, snr=0.16, seed=None, noise=None):
    """One Langevin correction at time ``t`` with the signal-to-noise step rule."""
    if snr <= 0:
        raise ValueError("snr must be positive")
    x = np.asarray(x, dtype=np.float64)
    z = _rng(seed).standard_normal(x.shape) if noise is None else noise
    s = model(x, t)
    if x.ndim >= 3:
        s_norm, z_norm = _sample_norm(s), _sample_norm(z)
    else:
        s_norm, z_norm = np.linalg.norm(s), np.linalg.norm(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        eps = np.where(s_norm > 0, 2.0 * (snr * z_norm / s_norm) ** 2, 0.0)
    if x.ndim >= 3:
        eps = _per_sample(eps, x)
    return x + eps * s + np.sqrt(2.0 * eps) * z


def predictor_step(x, t_index, model, schedule, seed=None, noise=None):
    """Move from level ``t_index + 1`` to level ``t_index`` (1-based levels).

    ``x' = x + (s_{t+1}^2 - s_t^2) * score(x, t+1) + sqrt(s_{t+1}^2 - s_t^2) * Z``.
    """
    if not 1 <= t_index < schedule.n_scales:
        raise ValueError(f"t_index must lie in 1..{schedule.n_scales - 1}")
    hi, lo = t_index + 1, t_index
    return reverse_diffusion_step(
        x,
        schedule.level_sigma(hi),
        schedule.level_sigma(lo),
        schedule.level_time(hi),
        model,
        seed,
        noise,
    )


def corrector_step(x, t_index, model, schedule, snr=0.16, seed=None, noise=None, n_steps=1):
    """``n_steps`` Langevin corrections at level ``t_index``."""
    rng = _rng(seed)
    t = schedule.level_time(t_index)
    for _ in range(n_steps):
        x = langevin_step(x, t, model, snr, rng, noise)
    return x


def pc_sample(model, shape, schedule, snr=0.16, n_corrector=1, seed=None, x_init=None):
    """Predictor-corrector sampling from ``sigma_max`` noise down to level 1.

    ``shape`` may carry a leading batch axis; each sample gets its own
    corrector step size.
    """
    rng = _rng(seed)
    x = schedule.sigma_max * rng.standard_normal(shape) if x_init is None else np.array(x_init)
    for j in range(schedule.n_scales - 1, 0, -1):
        x = predictor_step(x, j, model, schedule, rng)
        x = corrector_step(x, j, model, schedule, snr, rng, n_steps=n_corrector)
    return x
