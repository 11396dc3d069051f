"""Separable orthogonal 2D wavelet transform with periodic boundaries, and
the complementary high-pass / low-pass projections built on it.

Complex inputs are transformed on real and imaginary parts independently,
which keeps every operator here linear over the complex field.
"""

from dataclasses import dataclass, field

import numpy as np

_SQRT2 = np.sqrt(2.0)
_SQRT3 = np.sqrt(3.0)

# Orthonormal scaling filters (sum to sqrt(2)).
_LOWPASS = {
    "haar": np.array([1.0, 1.0]) / _SQRT2,
    "db4": np.array([1 + _SQRT3, 3 + _SQRT3, 3 - _SQRT3, 1 - _SQRT3]) / (4 * _SQRT2),
}
_ALIASES = {"haar": "haar", "db1": "haar", "db4": "db4", "daubechies-4": "db4", "daubechies4": "db4"}


@dataclass(frozen=True)
class WaveletSpec:
    """Wavelet family and decomposition depth.

    ``family`` is ``"haar"`` or ``"db4"`` (the four-tap Daubechies filter,
    two vanishing moments).
    """

    family: str = "haar"
    levels: int = 2

    def __post_init__(self):
        fam = _ALIASES.get(str(self.family).lower())
        if fam is None:
            raise ValueError(f"unknown wavelet family {self.family!r}; use 'haar' or 'db4'")
        object.__setattr__(self, "family", fam)
        if int(self.levels) < 1:
            raise ValueError("levels must be >= 1")
        object.__setattr__(self, "levels", int(self.levels))

    def check_shape(self, shape):
        h, w = shape
        step = 2**self.levels
        if h % step or w % step:
            raise ValueError(
                f"grid {h}x{w} is not divisible by 2**{self.levels}={step}; "
                "pad the grid or lower the number of levels"
            )


@dataclass
class SubbandSet:
    """Coarsest approximation plus ``(LH, HL, HH)`` detail triples.

    ``details[0]`` is the finest level. In each triple, LH is low-pass along
    columns (axis 1) and high-pass along rows (axis 0), HL the reverse.
    """

    approximation: np.ndarray
    details: list = field(default_factory=list)

    @property
    def size(self):
        return self.approximation.size + sum(d.size for triple in self.details for d in triple)


def _filters(family):
    lo = _LOWPASS[family]
    n = len(lo)
    hi = np.array([(-1) ** j * lo[n - 1 - j] for j in range(n)])
    return lo, hi


def _analysis(x, filt, axis):
    # out[i] = sum_j filt[j] * x[(2i + j) mod n]
    x = np.moveaxis(x, axis, -1)
    n = x.shape[-1]
    idx = (2 * np.arange(n // 2)[:, None] + np.arange(len(filt))[None, :]) % n
    out = np.tensordot(x[..., idx], filt, axes=([-1], [0]))
    return np.moveaxis(out, -1, axis)


def _synthesis(c, filt, axis, n):
    # adjoint of _analysis: x[(2i + j) mod n] += filt[j] * c[i]
    c = np.moveaxis(c, axis, -1)
    out = np.zeros(c.shape[:-1] + (n,), dtype=c.dtype)
    i = np.arange(n // 2)
    for j, f in enumerate(filt):
        np.add.at(out, (..., (2 * i + j) % n), f * c)
    return np.moveaxis(out, -1, axis)


def _dwt2_real(x, spec):
    lo, hi = _filters(spec.family)
    details = []
    a = x
    for _ in range(spec.levels):
        rl = _analysis(a, lo, 0)
        rh = _analysis(a, hi, 0)
        ll = _analysis(rl, lo, 1)
        lh = _analysis(rh, lo, 1)
        hl = _analysis(rl, hi, 1)
        hh = _analysis(rh, hi, 1)
        details.append((lh, hl, hh))
        a = ll
    return a, details


def _idwt2_real(a, details, spec):
    lo, hi = _filters(spec.family)
    for lh, hl, hh in reversed(details):
        h2, w2 = a.shape
        rl = _synthesis(a, lo, 1, 2 * w2) + _synthesis(hl, hi, 1, 2 * w2)
        rh = _synthesis(lh, lo, 1, 2 * w2) + _synthesis(hh, hi, 1, 2 * w2)
        a = _synthesis(rl, lo, 0, 2 * h2) + _synthesis(rh, hi, 0, 2 * h2)
    return a


def dwt2(x, spec=WaveletSpec()):
    """Multi-level 2D DWT of a real or complex grid."""
    x = np.asarray(x)
    if x.ndim != 2:
        raise ValueError(f"dwt2 expects a 2D grid, got shape {x.shape}")
    spec.check_shape(x.shape)
    if np.iscomplexobj(x):
        ar, dr = _dwt2_real(x.real.astype(float), spec)
        ai, di = _dwt2_real(x.imag.astype(float), spec)
        details = [tuple(r + 1j * i for r, i in zip(tr, ti)) for tr, ti in zip(dr, di)]
        return SubbandSet(ar + 1j * ai, details)
    a, d = _dwt2_real(x.astype(float), spec)
    return SubbandSet(a, d)


def idwt2(s, spec=WaveletSpec()):
    """Inverse of :func:`dwt2`."""
    if len(s.details) != spec.levels:
        raise ValueError(f"subband set has {len(s.details)} levels, spec expects {spec.levels}")
    a = s.approximation
    if np.iscomplexobj(a) or any(np.iscomplexobj(d) for t in s.details for d in t):
        re = _idwt2_real(a.real, [tuple(d.real for d in t) for t in s.details], spec)
        im = _idwt2_real(np.imag(a), [tuple(np.imag(d) for d in t) for t in s.details], spec)
        return re + 1j * im
    return _idwt2_real(a, s.details, spec)


def highpass(x, spec=WaveletSpec()):
    """Reconstruct from detail subbands only (approximation zeroed)."""
    s = dwt2(x, spec)
    s.approximation = np.zeros_like(s.approximation)
    return idwt2(s, spec)


def lowpass(x, spec=WaveletSpec()):
    """Reconstruct from the approximation subband only (details zeroed)."""
    s = dwt2(x, spec)
    s.details = [tuple(np.zeros_like(d) for d in t) for t in s.details]
    return idwt2(s, spec)
