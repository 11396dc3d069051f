"""File formats.

KSP1 (complex grids and stacks)::

    b"KSP1" | u32 height | u32 width | u32 channels | C*H*W x (f64 real, f64 imag)

little-endian, row-major, channel-major. Masks are stored with imag = 0 and
real in {0, 1}; stacked real tensors store one plane per channel with imag = 0.

SCM1 (score model checkpoints)::

    b"SCM1" | u32 n_layers | per layer: u32 out, u32 in, u32 kh, u32 kw
           | per layer: out*in*kh*kw f64 weights, then out f64 biases

All writers go through a temp file and ``os.replace`` so concurrent runs never
see partial files.
"""

import csv
import io as _io
import json
import os
import struct
import tempfile

import numpy as np

KSP1_MAGIC = b"KSP1"
SCM1_MAGIC = b"SCM1"


class FormatError(ValueError):
    pass


def atomic_write(path, data, mode="wb"):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, mode) as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def encode_ksp1(arr):
    a = np.asarray(arr)
    if a.ndim == 2:
        a = a[None]
    if a.ndim != 3:
        raise ValueError(f"KSP1 stores (H, W) or (C, H, W) arrays, got shape {a.shape}")
    c, h, w = a.shape
    pairs = np.empty((c, h, w, 2), dtype="<f8")
    pairs[..., 0] = np.real(a)
    pairs[..., 1] = np.imag(a)
    return KSP1_MAGIC + struct.pack("<III", h, w, c) + pairs.tobytes()


def decode_ksp1(buf):
    if buf[:4] != KSP1_MAGIC:
        raise FormatError("not a KSP1 file (bad magic)")
    h, w, c = struct.unpack("<III", buf[4:16])
    expected = 16 + c * h * w * 16
    if len(buf) != expected:
        raise FormatError(f"KSP1 payload size {len(buf)} != expected {expected}")
    pairs = np.frombuffer(buf, dtype="<f8", offset=16).reshape(c, h, w, 2)
    return (pairs[..., 0] + 1j * pairs[..., 1]).astype(np.complex128)


def write_ksp1(path, arr):
    atomic_write(path, encode_ksp1(arr))


def read_ksp1(path):
    """Return a ``(C, H, W)`` complex array."""
    with open(path, "rb") as f:
        return decode_ksp1(f.read())


def read_grid(path):
    """Read a single-channel KSP1 file as an ``(H, W)`` complex grid."""
    a = read_ksp1(path)
    if a.shape[0] != 1:
        raise FormatError(f"{path} holds {a.shape[0]} channels, expected 1")
    return a[0]


def read_mask(path):
    """Read a mask stored as KSP1 or as a P5 graymap."""
    with open(path, "rb") as f:
        head = f.read(2)
    if head == b"P5":
        return read_pgm(path) > 0
    a = read_grid(path)
    if np.any(a.imag != 0) or not np.all(np.isin(a.real, (0.0, 1.0))):
        raise FormatError(f"{path} is not a binary mask")
    return a.real > 0


def encode_pgm(mask_or_image, maxval=None):
    a = np.asarray(mask_or_image)
    if a.dtype == bool or maxval == 1:
        data = a.astype(np.uint8)
        maxval = 1
    else:
        a = np.abs(a).astype(float)
        peak = a.max() if a.max() > 0 else 1.0
        maxval = maxval or 255
        data = np.round(a / peak * maxval).astype(np.uint8)
    h, w = data.shape
    return f"P5\n{w} {h}\n{maxval}\n".encode() + data.tobytes()


def write_pgm(path, mask_or_image, maxval=None):
    atomic_write(path, encode_pgm(mask_or_image, maxval))


def read_pgm(path):
    with open(path, "rb") as f:
        buf = f.read()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while buf[pos:pos + 1].isspace():
            pos += 1
        if buf[pos:pos + 1] == b"#":
            pos = buf.index(b"\n", pos) + 1
            continue
        end = pos
        while not buf[end:end + 1].isspace():
            end += 1
        tokens.append(buf[pos:end])
        pos = end
    if tokens[0] != b"P5":
        raise FormatError("not a P5 graymap")
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval > 255:
        raise FormatError("16-bit graymaps are not supported")
    return np.frombuffer(buf, dtype=np.uint8, offset=pos + 1, count=w * h).reshape(h, w)


def encode_scm1(params):
    if len(params) % 2:
        raise ValueError("expected alternating weight/bias arrays")
    layers = [(params[i], params[i + 1]) for i in range(0, len(params), 2)]
    out = [SCM1_MAGIC, struct.pack("<I", len(layers))]
    for w, b in layers:
        if w.ndim != 4 or b.shape != (w.shape[0],):
            raise ValueError(f"bad layer shapes {w.shape}, {b.shape}")
        out.append(struct.pack("<IIII", *w.shape))
    for w, b in layers:
        out.append(np.ascontiguousarray(w, dtype="<f8").tobytes())
        out.append(np.ascontiguousarray(b, dtype="<f8").tobytes())
    return b"".join(out)


def decode_scm1(buf):
    if buf[:4] != SCM1_MAGIC:
        raise FormatError("not an SCM1 checkpoint (bad magic)")
    (n,) = struct.unpack("<I", buf[4:8])
    shapes = [struct.unpack("<IIII", buf[8 + 16 * i:24 + 16 * i]) for i in range(n)]
    pos = 8 + 16 * n
    params = []
    for shape in shapes:
        count = int(np.prod(shape))
        params.append(np.frombuffer(buf, "<f8", count, pos).reshape(shape).astype(np.float64))
        pos += 8 * count
        params.append(np.frombuffer(buf, "<f8", shape[0], pos).astype(np.float64))
        pos += 8 * shape[0]
    if pos != len(buf):
        raise FormatError(f"SCM1 has {len(buf) - pos} trailing bytes")
    return params


def save_model(path, model):
    atomic_write(path, encode_scm1(model.params))


def load_model(path, schedule=None):
    from .denoiser import TinyDenoiser
    from .sde import NoiseSchedule

    with open(path, "rb") as f:
        params = decode_scm1(f.read())
    return TinyDenoiser.from_params(params, schedule or NoiseSchedule())


def csv_text(header, rows):
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def write_csv(path, header, rows):
    atomic_write(path, csv_text(header, rows), mode="w")


def write_loss_csv(path, losses):
    write_csv(path, ["step", "loss"], [(i, l) for i, l in enumerate(losses)])


def write_json(path, obj):
    atomic_write(path, json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n", mode="w")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if hasattr(o, "__dataclass_fields__"):
        from dataclasses import asdict

        return asdict(o)
    return str(o)


def read_config(path):
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    cfg = {}
    with open(path) as f:
        for n, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise FormatError(f"{path}:{n}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            cfg[key.replace("-", "_")] = value
    return cfg
