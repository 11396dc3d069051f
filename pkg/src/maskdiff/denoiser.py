"""A small numpy convolutional score network with hand-written backprop,
an Adam optimizer, and the training loop.

The network maps ``(B, C, H, W)`` planes to a score of the same shape::

    h0 = concat(x * c_in(sigma), log(sigma))     # C + 1 planes
    h1 = relu(conv(h0)); h2 = relu(conv(h1)); raw = conv(h2)
    score = raw / sigma

with 3x3 kernels and periodic padding. ``c_in = 1 / sqrt(data_std**2 + sigma**2)``
keeps the network input at unit scale across the whole noise range.
"""

import math
from dataclasses import dataclass

import numpy as np

from .sde import NoiseSchedule, ScoreModel, dsm_loss

_OFFSETS = [(dy, dx) for dy in (-1, 0, 1) for dx in (-1, 0, 1)]


def _patches(x):
    # (B, C, H, W) -> (B, C * 9, H * W); patch[c * 9 + o] = x[c, i + dy, j + dx] (periodic)
    b, c, h, w = x.shape
    p = np.empty((b, c, 9, h, w))
    for o, (dy, dx) in enumerate(_OFFSETS):
        p[:, :, o] = np.roll(x, shift=(-dy, -dx), axis=(2, 3))
    return p.reshape(b, c * 9, h * w)


def _unpatch(dp, shape):
    b, c, h, w = shape
    dp = dp.reshape(b, c, 9, h, w)
    dx_ = np.zeros(shape)
    for o, (dy, dx) in enumerate(_OFFSETS):
        dx_ += np.roll(dp[:, :, o], shift=(dy, dx), axis=(2, 3))
    return dx_


class TinyDenoiser(ScoreModel):
    """Three-layer periodic CNN score model.

    Parameters are stored as ``[w1, b1, w2, b2, w3, b3]`` with weights shaped
    ``(out, in, 3, 3)``.
    """

    trainable = True

    def __init__(self, channels=6, hidden=32, seed=0, schedule=NoiseSchedule(), data_std=1.0):
        super().__init__(schedule)
        if channels < 1 or hidden < 1:
            raise ValueError("channels and hidden must be positive")
        self.channels = int(channels)
        self.hidden = int(hidden)
        self.data_std = float(data_std)
        rng = np.random.default_rng(seed)
        dims = [(self.hidden, self.channels + 1), (self.hidden, self.hidden), (self.channels, self.hidden)]
        self.params = []
        for i, (co, ci) in enumerate(dims):
            scale = math.sqrt(2.0 / (ci * 9))
            if i == len(dims) - 1:
                scale *= 0.1
            self.params.append(scale * rng.standard_normal((co, ci, 3, 3)))
            self.params.append(np.zeros(co))

    @classmethod
    def from_params(cls, params, schedule=NoiseSchedule(), data_std=1.0):
        w1, w3 = params[0], params[4]
        model = cls(channels=w3.shape[0], hidden=w1.shape[0], schedule=schedule, data_std=data_std)
        if w1.shape[1] != model.channels + 1:
            raise ValueError("first layer input width must be channels + 1")
        model.params = [np.array(p, dtype=np.float64) for p in params]
        return model

    @property
    def layer_shapes(self):
        return [self.params[i].shape for i in range(0, len(self.params), 2)]

    def copy(self):
        return TinyDenoiser.from_params(self.params, self.schedule, self.data_std)

    def _check(self, x):
        if x.shape[-3] != self.channels:
            raise ValueError(f"denoiser expects {self.channels} planes, got {x.shape[-3]}")

    def forward(self, x, t):
        x = np.asarray(x, dtype=np.float64)
        self._check(x)
        single = x.ndim == 3
        if single:
            x = x[None]
        b, c, h, w = x.shape
        sig = np.broadcast_to(np.asarray(self.schedule.sigma(t), dtype=np.float64), (b,))
        c_in = 1.0 / np.sqrt(self.data_std**2 + sig**2)
        h0 = np.concatenate(
            [x * c_in[:, None, None, None], np.broadcast_to(np.log(sig)[:, None, None, None], (b, 1, h, w))],
            axis=1,
        )
        acts = [h0]
        pre = []
        a = h0
        n_layers = len(self.params) // 2
        cols = []
        for layer in range(n_layers):
            wgt, bias = self.params[2 * layer], self.params[2 * layer + 1]
            p = _patches(a)
            cols.append(p)
            z = np.matmul(wgt.reshape(wgt.shape[0], -1), p) + bias[None, :, None]
            z = z.reshape(b, wgt.shape[0], h, w)
            pre.append(z)
            a = np.maximum(z, 0) if layer < n_layers - 1 else z
            acts.append(a)
        out = a / sig[:, None, None, None]
        cache = (x.shape, sig, cols, pre, single)
        return (out[0] if single else out), cache

    def __call__(self, x, t):
        return self.forward(x, t)[0]

    def vjp(self, cache, grad_out):
        """Parameter gradients given ``d loss / d output``."""
        shape, sig, cols, pre, single = cache
        g = np.asarray(grad_out, dtype=np.float64)
        if single:
            g = g[None]
        b, _, h, w = shape
        g = g / sig[:, None, None, None]
        grads = [None] * len(self.params)
        n_layers = len(self.params) // 2
        for layer in reversed(range(n_layers)):
            wgt = self.params[2 * layer]
            if layer < n_layers - 1:
                g = g * (pre[layer] > 0)
            gm = g.reshape(b, wgt.shape[0], h * w)
            grads[2 * layer] = np.einsum("bok,bjk->oj", gm, cols[layer]).reshape(wgt.shape)
            grads[2 * layer + 1] = gm.sum(axis=(0, 2))
            if layer > 0:
                dp = np.matmul(wgt.reshape(wgt.shape[0], -1).T, gm)
                g = _unpatch(dp, (b, wgt.shape[1], h, w))
        return grads


def tiny_denoiser(channels=6, hidden=32, seed=0, schedule=NoiseSchedule()):
    return TinyDenoiser(channels, hidden, seed, schedule)


class Adam:
    def __init__(self, params, lr=1e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        if not (0 < beta1 < 1 and 0 < beta2 < 1):
            raise ValueError("Adam betas must lie in (0, 1)")
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


@dataclass(frozen=True)
class TrainingConfig:
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    batch_size: int = 2
    steps: int = 2000
    weighting: str = "sigma_sq"

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("beta1 and beta2 must lie in (0, 1)")
        if self.batch_size < 1 or self.steps < 0:
            raise ValueError("batch_size must be >= 1 and steps >= 0")
        if self.weighting != "sigma_sq":
            raise ValueError("only sigma_sq weighting is supported")


class TrainingError(RuntimeError):
    pass


def train(model, dataset, cfg=TrainingConfig(), schedule=None, seed=0, log_every=0, log=print):
    """Train ``model`` in place with Adam on the DSM loss.

    Mini-batches are drawn from a fresh permutation of ``dataset`` each
    epoch. Returns ``(model, losses)`` with one loss per step.
    """
    if not getattr(model, "trainable", False):
        raise TypeError("train() needs a trainable score model")
    data = np.asarray([np.asarray(getattr(d, "channels", d), dtype=np.float64) for d in dataset])
    if data.shape[0] == 0:
        raise ValueError("training dataset is empty")
    schedule = schedule or model.schedule
    rng = np.random.default_rng(seed)
    opt = Adam(model.params, cfg.learning_rate, cfg.beta1, cfg.beta2)
    losses = []
    order = np.empty(0, dtype=int)
    for step in range(cfg.steps):
        if order.size < cfg.batch_size:
            order = np.concatenate([order, rng.permutation(data.shape[0])])
        idx, order = order[: cfg.batch_size], order[cfg.batch_size:]
        loss, grads = dsm_loss(model, data[idx], schedule, rng, gradients=True)
        if not math.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads):
            raise TrainingError(f"non-finite loss or gradient at step {step} (loss={loss})")
        opt.step(model.params, grads)
        losses.append(loss)
        if log_every and (step + 1) % log_every == 0:
            log(f"step {step + 1}: loss {np.mean(losses[-log_every:]):.4f}")
    return model, losses


def evaluation_loss(model, dataset, schedule=None, seed=1234, repeats=4):
    """DSM loss averaged over a fixed set of noise draws; comparable across training."""
    schedule = schedule or model.schedule
    data = [np.asarray(getattr(d, "channels", d), dtype=np.float64) for d in dataset]
    rng = np.random.default_rng(seed)
    total = [dsm_loss(model, data, schedule, rng)[0] for _ in range(repeats)]
    return float(np.mean(total))
