"""Synthetic images and datasets.

Every generator returns a complex ``(size, size)`` grid scaled to unit
maximum magnitude.
"""

import json
import os
from dataclasses import dataclass, field

import numpy as np

SHEPP_LOGAN = "shepp_logan"
GAUSSIAN_BLOBS = "gaussian_blobs"
SMOOTH_RANDOM = "smooth_random"
KINDS = (SHEPP_LOGAN, GAUSSIAN_BLOBS, SMOOTH_RANDOM)

# Modified Shepp-Logan (Toft): intensity, semi-axes a, b, centre x0, y0, angle (deg).
_ELLIPSES = [
    (1.0, 0.69, 0.92, 0.0, 0.0, 0),
    (-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0),
    (-0.2, 0.1100, 0.3100, 0.22, 0.0, -18),
    (-0.2, 0.1600, 0.4100, -0.22, 0.0, 18),
    (0.1, 0.2100, 0.2500, 0.0, 0.35, 0),
    (0.1, 0.0460, 0.0460, 0.0, 0.1, 0),
    (0.1, 0.0460, 0.0460, 0.0, -0.1, 0),
    (0.1, 0.0460, 0.0230, -0.08, -0.605, 0),
    (0.1, 0.0230, 0.0230, 0.0, -0.606, 0),
    (0.1, 0.0230, 0.0460, 0.06, -0.605, 0),
]


def _normalize(img):
    peak = np.abs(img).max()
    return (img / peak).astype(np.complex128) if peak > 0 else img.astype(np.complex128)


def _coords(size):
    c = (np.arange(size) - (size - 1) / 2) / (size / 2)
    x, y = np.meshgrid(c, -c)
    return x, y


def shepp_logan(size):
    x, y = _coords(size)
    img = np.zeros((size, size))
    for rho, a, b, x0, y0, ang in _ELLIPSES:
        th = np.deg2rad(ang)
        xr = (x - x0) * np.cos(th) + (y - y0) * np.sin(th)
        yr = -(x - x0) * np.sin(th) + (y - y0) * np.cos(th)
        img[(xr / a) ** 2 + (yr / b) ** 2 <= 1] += rho
    return _normalize(img)


def gaussian_blobs(size, seed=0):
    rng = np.random.default_rng(seed)
    x, y = _coords(size)
    mag = np.zeros((size, size))
    for _ in range(rng.integers(3, 9)):
        cx, cy = rng.uniform(-0.6, 0.6, 2)
        sx, sy = rng.uniform(0.08, 0.35, 2)
        mag += rng.uniform(0.3, 1.0) * np.exp(-((x - cx) ** 2 / (2 * sx**2) + (y - cy) ** 2 / (2 * sy**2)))
    a, b, c = rng.uniform(-np.pi, np.pi, 3)
    phase = a * x + b * y + c * x * y
    return _normalize(mag * np.exp(1j * phase))


def smooth_random(size, seed=0, cutoff=0.08):
    rng = np.random.default_rng(seed)
    field_ = rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))
    f = np.fft.fftfreq(size)
    fx, fy = np.meshgrid(f, f)
    lowpass = np.exp(-(fx**2 + fy**2) / (2 * cutoff**2))
    return _normalize(np.fft.ifft2(np.fft.fft2(field_) * lowpass))


def make_phantom(kind=SHEPP_LOGAN, size=64, seed=0):
    if size < 16:
        raise ValueError("phantom size must be >= 16")
    if kind == SHEPP_LOGAN:
        return shepp_logan(size)
    if kind == GAUSSIAN_BLOBS:
        return gaussian_blobs(size, seed)
    if kind == SMOOTH_RANDOM:
        return smooth_random(size, seed)
    raise ValueError(f"unknown phantom kind {kind!r}; choose from {KINDS}")


@dataclass
class Dataset:
    items: list
    manifest: dict = field(default_factory=dict)

    def __post_init__(self):
        self.items = [np.asarray(i, dtype=np.complex128) for i in self.items]
        shapes = {i.shape for i in self.items}
        if len(shapes) > 1:
            raise ValueError(f"dataset items have mixed shapes {sorted(shapes)}")

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    @property
    def shape(self):
        return self.items[0].shape if self.items else None


def make_dataset(kind, count, size, seed=0):
    items = [make_phantom(kind, size, seed + i) for i in range(count)]
    return Dataset(items, {"generator": kind, "seed": seed, "count": count, "dims": [size, size]})


def augment(ds, flips=True, rotations=True):
    """Append flipped and rotated copies of every item.

    With both options on, each item expands to its 8-element dihedral orbit
    (duplicates kept). Flips alone add horizontal and vertical flips;
    rotations alone add 90, 180 and 270 degree turns.
    """
    if rotations and any(i.shape[0] != i.shape[1] for i in ds.items):
        raise ValueError("rotations require square grids")
    out = []
    for img in ds.items:
        variants = [img]
        if rotations:
            variants += [np.rot90(img, r) for r in (1, 2, 3)]
        if flips and rotations:
            variants += [np.fliplr(v) for v in list(variants)]
        elif flips:
            variants += [np.fliplr(img), np.flipud(img)]
        out.extend(np.ascontiguousarray(v) for v in variants)
    manifest = dict(ds.manifest, augmented={"flips": flips, "rotations": rotations})
    manifest["count"] = len(out)
    return Dataset(out, manifest)


def save_dataset(ds, directory):
    from .io import write_json, write_ksp1

    os.makedirs(directory, exist_ok=True)
    names = []
    for i, item in enumerate(ds.items):
        name = f"item_{i:05d}.ksp"
        write_ksp1(os.path.join(directory, name), item)
        names.append(name)
    write_json(os.path.join(directory, "manifest.json"), dict(ds.manifest, files=names))


def load_dataset(directory):
    from .io import read_ksp1

    with open(os.path.join(directory, "manifest.json")) as f:
        manifest = json.load(f)
    items = [read_ksp1(os.path.join(directory, n))[0] for n in manifest.pop("files")]
    return Dataset(items, manifest)
