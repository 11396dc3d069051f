"""Command-line entry point.

Every artifact-producing subcommand writes a ``manifest.json`` next to its
outputs. Settings come from an optional flat ``key = value`` config file
(``--config``); explicit flags override it. The output directory defaults to
``$MASKDIFF_OUTPUT_DIR`` or ``./runs/<subcommand>``.
"""

import argparse
import math
import os
import platform
import sys
import time
import zlib
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from . import io as mio
from .denoiser import TinyDenoiser, TrainingConfig, evaluation_loss, train
from .kspace import Measurement, acceleration_factor, apply_sampling, as_mask, fft2c, zero_filled
from .masks import MaskRanges, ThresholdRange, frequency_residuals, generate_masks
from .metrics import MSE_SCALE, SSIMConfig, evaluate, format_table
from .patterns import PatternSpec, generate_pattern
from .phantoms import KINDS as PHANTOM_KINDS
from .phantoms import GAUSSIAN_BLOBS, SMOOTH_RANDOM, Dataset, augment, load_dataset, make_dataset, make_phantom, save_dataset
from .recon import ReconConfig, reconstruct, surrogate_score, trace_rows
from .sde import NoiseSchedule
from .stack import layout_d1, layout_d2, stack_hybrid
from .wavelets import WaveletSpec

OUTPUT_ENV = "MASKDIFF_OUTPUT_DIR"


class StageError(RuntimeError):
    def __init__(self, stage, msg):
        super().__init__(f"[{stage}] {msg}")
        self.stage = stage


def derive_seed(seed, stream):
    """Independent integer seed for a named sub-stream (data/noise/sampler)."""
    ss = np.random.SeedSequence([int(seed), zlib.crc32(stream.encode())])
    return int(ss.generate_state(1)[0])


class Run:
    """Collects manifest fields and per-stage timings for one invocation."""

    def __init__(self, args, argv):
        self.args = args
        self.argv = list(argv)
        self.out = args.out or os.environ.get(OUTPUT_ENV) or os.path.join("runs", args.command)
        os.makedirs(self.out, exist_ok=True)
        self.timings = {}
        self.outputs = []
        self.extra = {}

    def path(self, name):
        p = os.path.join(self.out, name)
        self.outputs.append(p)
        return p

    def stage(self, name):
        run = self

        class _Stage:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, exc_type, exc, tb):
                run.timings[name] = round(time.perf_counter() - self.t0, 6)
                if exc_type is not None and not isinstance(exc, (StageError, KeyboardInterrupt)):
                    raise StageError(name, f"{exc_type.__name__}: {exc}") from exc

        return _Stage()

    def write_manifest(self):
        config = {k: v for k, v in vars(self.args).items() if k not in ("func",)}
        seed = getattr(self.args, "seed", None)
        seeds = None
        if seed is not None:
            seeds = {"seed": seed, **{s: derive_seed(seed, s) for s in ("data", "noise", "sampler")}}
        manifest = {
            "command": self.args.command,
            "argv": self.argv,
            "config": config,
            "seeds": seeds,
            "versions": {
                "maskdiff": __version__,
                "numpy": np.__version__,
                "python": platform.python_version(),
            },
            "outputs": [os.path.relpath(p, self.out) for p in self.outputs],
            "timings_s": self.timings,
            **self.extra,
        }
        mio.write_json(os.path.join(self.out, "manifest.json"), manifest)


# -- argument helpers ----------------------------------------------------------------


def _float_pair(text):
    lo, hi = (s.strip() for s in text.split(","))
    return float(lo), float(hi) if hi.lower() not in ("inf", "+inf") else math.inf


def _range_list(text):
    return [_float_pair(p) for p in text.split(";") if p.strip()]


def _int_list(text):
    return [int(s) for s in str(text).split(",") if s.strip()]


def _float_list(text):
    return [float(s) for s in str(text).split(",") if s.strip()]


def _str_list(text):
    return [s.strip() for s in str(text).split(",") if s.strip()]


def _bool(text):
    if isinstance(text, bool):
        return text
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _add_common(p):
    p.add_argument("--config", help="flat key = value config file (flags win)")
    p.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or runs/<command>)")
    p.add_argument("--seed", type=int, default=0)


def _add_schedule(p):
    p.add_argument("--sigma-min", type=float, default=0.01)
    p.add_argument("--sigma-max", type=float, default=378.0)
    p.add_argument("--n-scales", type=int, default=1000)


def _add_masks(p):
    p.add_argument("--wavelet", default="haar", choices=["haar", "db4"])
    p.add_argument("--levels", type=int, default=2)
    p.add_argument("--threshold-mode", default="quantile", choices=["quantile", "absolute"])
    p.add_argument("--low-range", type=_float_pair, default=(0.70, 1.0), help="lo,hi for the low mask")
    p.add_argument(
        "--high-ranges", type=_range_list, default=None, help="'lo,hi;lo,hi' per high mask (default 0.5,1;0.75,1)"
    )


def _add_recon(p):
    _add_schedule(p)
    _add_masks(p)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--T", type=int, default=200, dest="T", help="outer iterations")
    p.add_argument("--M", type=int, default=1, dest="M", help="corrector loops per predictor step")
    p.add_argument("--snr", type=float, default=0.16)
    p.add_argument("--recombine", default="mean", choices=["mean", "mask_weighted"])
    p.add_argument("--dc-mode", default="per_iteration", choices=["per_iteration", "final"])


def _add_measurement(p):
    p.add_argument("--kspace", help="measured k-space (KSP1); requires --mask")
    p.add_argument("--mask", help="sampling mask (KSP1 or P5)")
    p.add_argument("--reference", help="ground-truth image (KSP1) for metrics")
    p.add_argument("--phantom", default="shepp_logan", choices=list(PHANTOM_KINDS))
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--pattern", default="random2d", choices=["random2d", "poisson", "radial"])
    p.add_argument("--R", type=float, default=4.0, dest="R")
    p.add_argument("--center-fraction", type=float, default=0.04)
    p.add_argument("--noise-std", type=float, default=0.0)


def _add_models(p):
    p.add_argument("--analytic-score", action="store_true", help="Gaussian surrogate score centred on the reference")
    p.add_argument("--analytic-var", type=float, default=1e-4)
    p.add_argument("--model", help="SCM1 checkpoint shared by both cascade stages")
    p.add_argument("--model-d1", help="SCM1 checkpoint for the first stage")
    p.add_argument("--model-d2", help="SCM1 checkpoint for the second stage")


def build_parser():
    parser = argparse.ArgumentParser(prog="maskdiff", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"maskdiff {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="build a phantom dataset")
    _add_common(p)
    p.add_argument("--kind", default=GAUSSIAN_BLOBS, choices=list(PHANTOM_KINDS))
    p.add_argument("--count", type=int, default=16)
    p.add_argument("--size", type=int, default=32)
    p.add_argument("--flips", type=_bool, nargs="?", const=True, default=False)
    p.add_argument("--rotations", type=_bool, nargs="?", const=True, default=False)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("gen-mask", help="adaptive masks and residual maps for a k-space")
    _add_common(p)
    _add_masks(p)
    p.add_argument("--kspace", help="input k-space (KSP1); default: phantom k-space")
    p.add_argument("--phantom", default="shepp_logan", choices=list(PHANTOM_KINDS))
    p.add_argument("--size", type=int, default=64)
    p.set_defaults(func=cmd_gen_mask)

    p = sub.add_parser("gen-pattern", help="undersampling pattern")
    _add_common(p)
    p.add_argument("--kind", default="random2d", choices=["random2d", "poisson", "radial"])
    p.add_argument("--R", type=float, default=4.0, dest="R")
    p.add_argument("--center-fraction", type=float, default=0.04)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--height", type=int)
    p.add_argument("--width", type=int)
    p.set_defaults(func=cmd_gen_pattern)

    p = sub.add_parser("train", help="train a tiny score model")
    _add_common(p)
    _add_schedule(p)
    _add_masks(p)
    p.add_argument("--data", help="dataset directory from gen-data (default: synthetic phantoms)")
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--size", type=int, default=32)
    p.add_argument("--layout", default="d1", choices=["d1", "d2"])
    p.add_argument("--channels", type=int, default=6)
    p.add_argument("--hidden", type=int, default=32)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--beta1", type=float, default=0.9)
    p.add_argument("--beta2", type=float, default=0.999)
    p.add_argument("--batch-size", type=int, default=2)
    p.add_argument("--steps", type=int, default=2000)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("recon", help="reconstruct an undersampled measurement")
    _add_common(p)
    _add_measurement(p)
    _add_recon(p)
    _add_models(p)
    p.set_defaults(func=cmd_recon)

    p = sub.add_parser("eval", help="compare a reconstruction with a reference")
    _add_common(p)
    p.add_argument("recon")
    p.add_argument("reference")
    p.add_argument("--append", help="CSV file to append a result row to")
    p.add_argument("--label", default="")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="grid of reconstructions and channel ablation tables")
    _add_common(p)
    _add_recon(p)
    p.add_argument("--phantom", default="shepp_logan", choices=list(PHANTOM_KINDS))
    p.add_argument("--size", type=int, default=32)
    p.add_argument("--patterns", type=_str_list, default=["random2d"])
    p.add_argument("--Rs", type=_float_list, default=[8.0], dest="Rs")
    p.add_argument("--channels", type=_int_list, default=[6])
    p.add_argument("--center-fraction", type=float, default=0.04)
    p.add_argument("--noise-std", type=float, default=0.0)
    p.add_argument("--analytic-var", type=float, default=1e-4)
    p.add_argument("--train-steps", type=int, default=0, help="train a tiny model per channel count (0: analytic)")
    p.add_argument("--train-count", type=int, default=64)
    p.add_argument("--hidden", type=int, default=16)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("convergence", help="per-iteration metrics of one reconstruction")
    _add_common(p)
    _add_measurement(p)
    _add_recon(p)
    _add_models(p)
    p.set_defaults(func=cmd_convergence)
    return parser


def _apply_config(parser, argv):
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args, {}
    cfg = mio.read_config(args.config)
    subparser = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, value in cfg.items():
        action = known.get(key)
        if action is None:
            continue
        if isinstance(action, argparse._StoreTrueAction):
            defaults[key] = _bool(value)
        elif action.type is not None:
            defaults[key] = action.type(value)
        else:
            defaults[key] = value
    subparser.set_defaults(**defaults)
    return parser.parse_args(argv), cfg


# -- config builders -----------------------------------------------------------------


def schedule_from(args):
    return NoiseSchedule(args.sigma_min, args.sigma_max, args.n_scales)


def ranges_from(args, n_high=None):
    mode = args.threshold_mode
    low = ThresholdRange(*args.low_range, mode)
    if args.high_ranges:
        highs = tuple(ThresholdRange(lo, hi, mode) for lo, hi in args.high_ranges)
        if n_high is not None and len(highs) != n_high:
            raise StageError("config", f"{len(highs)} high ranges given but {n_high} high channels requested")
        return MaskRanges(low, highs)
    return MaskRanges.with_n_high(n_high or 2, low)


def recon_config_from(args, n_channels=None, seed=None):
    ranges = ranges_from(args, None if n_channels is None else n_channels // 2 - 1)
    n_high = len(ranges.highs)
    return ReconConfig(
        mu=args.mu,
        outer_steps=args.T,
        corrector_loops=args.M,
        snr=args.snr,
        schedule=schedule_from(args),
        wavelet=WaveletSpec(args.wavelet, args.levels),
        mask_ranges=ranges,
        layout_d1=layout_d1(n_high),
        layout_d2=layout_d2(n_high),
        recombine=args.recombine,
        dc_mode=args.dc_mode,
        seed=derive_seed(args.seed if seed is None else seed, "sampler"),
    )


def ssim_from(cfg):
    return SSIMConfig(
        win_size=int(cfg.get("ssim_win_size", 11)),
        sigma=float(cfg.get("ssim_sigma", 1.5)),
        k1=float(cfg.get("ssim_k1", 0.01)),
        k2=float(cfg.get("ssim_k2", 0.03)),
    )


# -- subcommands ---------------------------------------------------------------------


def cmd_gen_data(run, cfg):
    a = run.args
    with run.stage("generate"):
        ds = make_dataset(a.kind, a.count, a.size, derive_seed(a.seed, "data"))
        ds = augment(ds, a.flips, a.rotations) if (a.flips or a.rotations) else ds
    with run.stage("write"):
        save_dataset(ds, run.out)
        run.outputs.extend(os.path.join(run.out, f"item_{i:05d}.ksp") for i in range(len(ds)))
    print(f"wrote {len(ds)} items to {run.out}")


def cmd_gen_mask(run, cfg):
    a = run.args
    with run.stage("load"):
        if a.kspace:
            k = mio.read_grid(a.kspace)
        else:
            k = fft2c(make_phantom(a.phantom, a.size, derive_seed(a.seed, "data")))
    with run.stage("masks"):
        spec = WaveletSpec(a.wavelet, a.levels)
        ranges = ranges_from(a)
        low_res, high_res = frequency_residuals(k, spec)
        masks = generate_masks(k, spec, ranges.low, ranges.highs)
    with run.stage("write"):
        mio.write_ksp1(run.path("low_residual.ksp"), low_res)
        mio.write_ksp1(run.path("high_residual.ksp"), high_res)
        named = [("mask_L", masks.low)] + [(f"mask_H{i + 1}", m) for i, m in enumerate(masks.highs)]
        for name, m in named:
            mio.write_ksp1(run.path(name + ".ksp"), m.grid.astype(float))
            mio.write_pgm(run.path(name + ".pgm"), m.grid)
    run.extra["popcounts"] = {name: m.popcount for name, m in named}
    run.extra["resolved_thresholds"] = {name: list(m.resolved) for name, m in named}
    for name, m in named:
        print(f"{name}: {m.popcount} / {m.grid.size} selected")


def cmd_gen_pattern(run, cfg):
    a = run.args
    h, w = a.height or a.size, a.width or a.size
    with run.stage("pattern"):
        spec = PatternSpec(a.kind, a.R, a.center_fraction, derive_seed(a.seed, "data"))
        mask = generate_pattern(spec, h, w)
    with run.stage("write"):
        mio.write_ksp1(run.path("pattern.ksp"), mask.astype(float))
        mio.write_pgm(run.path("pattern.pgm"), mask)
    af = acceleration_factor(mask)
    run.extra["achieved_R"] = af
    print(f"{spec.kind}: {int(mask.sum())} samples, R = {af:.3f}")


def _training_tensors(images, ranges, spec, layout):
    out = []
    for img in images:
        k = fft2c(img)
        out.append(stack_hybrid(k, generate_masks(k, spec, ranges.low, ranges.highs), layout).channels)
    return out


def cmd_train(run, cfg):
    a = run.args
    n_high = a.channels // 2 - 1
    if a.channels < 4 or a.channels % 2:
        raise StageError("config", "--channels must be an even number >= 4")
    with run.stage("data"):
        if a.data:
            ds = load_dataset(a.data)
        else:
            seed = derive_seed(a.seed, "data")
            half = a.count // 2
            ds = Dataset(
                make_dataset(GAUSSIAN_BLOBS, a.count - half, a.size, seed).items
                + make_dataset(SMOOTH_RANDOM, half, a.size, seed + a.count).items
            )
        ranges = ranges_from(a, n_high)
        layout = layout_d1(n_high) if a.layout == "d1" else layout_d2(n_high)
        tensors = _training_tensors(ds.items, ranges, WaveletSpec(a.wavelet, a.levels), layout)
    schedule = schedule_from(a)
    model = TinyDenoiser(a.channels, a.hidden, derive_seed(a.seed, "init"), schedule)
    tcfg = TrainingConfig(a.lr, a.beta1, a.beta2, a.batch_size, a.steps)
    eval_set = tensors[: min(32, len(tensors))]
    with run.stage("train"):
        before = evaluation_loss(model, eval_set, schedule)
        model, losses = train(model, tensors, tcfg, schedule, derive_seed(a.seed, "noise"))
        after = evaluation_loss(model, eval_set, schedule)
    with run.stage("write"):
        mio.save_model(run.path("model.scm"), model)
        mio.write_loss_csv(run.path("loss.csv"), losses)
    run.extra["evaluation_loss"] = {"before": before, "after": after}
    print(f"trained {a.steps} steps: evaluation loss {before:.2f} -> {after:.2f}")


def _measurement(a):
    """Return ``(meas, reference_image_or_None, k_reference_or_None)``."""
    if a.kspace or a.mask:
        if not (a.kspace and a.mask):
            raise StageError("load", "--kspace and --mask must be given together")
        k = mio.read_grid(a.kspace)
        mask = as_mask(mio.read_mask(a.mask))
        meas = Measurement(np.where(mask, k, 0), mask, a.noise_std)
        ref = mio.read_grid(a.reference) if a.reference else None
        return meas, ref, (fft2c(ref) if ref is not None else None)
    ref = make_phantom(a.phantom, a.size, derive_seed(a.seed, "data"))
    k = fft2c(ref)
    mask = generate_pattern(PatternSpec(a.pattern, a.R, a.center_fraction, derive_seed(a.seed, "data")), *k.shape)
    return apply_sampling(k, mask, a.noise_std, derive_seed(a.seed, "noise")), ref, k


def _models(a, cfg, k_ref):
    if a.analytic_score:
        if k_ref is None:
            raise StageError("models", "--analytic-score needs a reference image")
        return (
            surrogate_score(k_ref, cfg.layout_d1, a.analytic_var, cfg.schedule),
            surrogate_score(k_ref, cfg.layout_d2, a.analytic_var, cfg.schedule),
        )
    p1 = a.model_d1 or a.model
    p2 = a.model_d2 or a.model
    if not (p1 and p2):
        raise StageError("models", "give --analytic-score, --model, or both --model-d1 and --model-d2")
    return mio.load_model(p1, cfg.schedule), mio.load_model(p2, cfg.schedule)


def _run_recon(run, cfg_file, trace_name):
    a = run.args
    with run.stage("measurement"):
        meas, ref, k_ref = _measurement(a)
    cfg = recon_config_from(a)
    with run.stage("models"):
        models = _models(a, cfg, k_ref)
    ssim_cfg = ssim_from(cfg_file)
    with run.stage("reconstruct"):
        k_final, image, state = reconstruct(meas, models, cfg, reference=ref)
    if not (np.all(np.isfinite(k_final)) and np.all(np.isfinite(image))):
        raise StageError("reconstruct", "non-finite output")
    with run.stage("write"):
        mio.write_ksp1(run.path("image.ksp"), image)
        mio.write_ksp1(run.path("kspace.ksp"), k_final)
        mio.write_pgm(run.path("image.pgm"), image)
        rows = trace_rows(state.trace)
        mio.write_csv(run.path(trace_name), ["iteration", "psnr", "ssim", "mse"], rows)
    run.extra["achieved_R"] = acceleration_factor(meas.mask)
    run.extra["metrics_normalization"] = "magnitude / max|reference|"
    if ref is not None:
        zf = evaluate(zero_filled(meas), ref, ssim_cfg)
        final = evaluate(image, ref, ssim_cfg)
        run.extra["metrics"] = {"zero_filled": zf.cell(), "reconstruction": final.cell()}
        print(f"zero-filled    {zf.cell()}")
        print(f"reconstruction {final.cell()}")
    return state


def cmd_recon(run, cfg):
    _run_recon(run, cfg, "metrics.csv")


def cmd_convergence(run, cfg):
    a = run.args
    if (a.kspace or a.mask) and not a.reference:
        raise StageError("config", "convergence needs --reference when reading a measurement from disk")
    _run_recon(run, cfg, "convergence.csv")


def cmd_eval(run, cfg):
    a = run.args
    with run.stage("evaluate"):
        row = evaluate(mio.read_grid(a.recon), mio.read_grid(a.reference), ssim_from(cfg))
    print(row.cell())
    if a.append:
        new = not os.path.exists(a.append)
        with open(a.append, "a") as f:
            if new:
                f.write("label,psnr,ssim,mse_e4,cell\n")
            f.write(f"{a.label},{row.psnr!r},{row.ssim!r},{row.mse * MSE_SCALE!r},{row.cell()}\n")


def _sweep_job(job):
    """One sweep cell; module-level so worker processes can pickle it."""
    args, pattern, R, channels, models = job
    ref = make_phantom(args.phantom, args.size, derive_seed(args.seed, "data"))
    k = fft2c(ref)
    mask = generate_pattern(PatternSpec(pattern, R, args.center_fraction, derive_seed(args.seed, "data")), *k.shape)
    meas = apply_sampling(k, mask, args.noise_std, derive_seed(args.seed, "noise"))
    cfg = recon_config_from(args, channels)
    if models is None:
        models = (
            surrogate_score(k, cfg.layout_d1, args.analytic_var, cfg.schedule),
            surrogate_score(k, cfg.layout_d2, args.analytic_var, cfg.schedule),
        )
    _, image, _ = reconstruct(meas, models, cfg)
    zf = evaluate(zero_filled(meas), ref)
    return pattern, R, channels, evaluate(image, ref), zf


def _sweep_models(args, channels):
    """Train one tiny model per channel count (shared by both cascade stages)."""
    seed = derive_seed(args.seed, "data")
    half = args.train_count // 2
    images = (
        make_dataset(GAUSSIAN_BLOBS, args.train_count - half, args.size, seed + 1).items
        + make_dataset(SMOOTH_RANDOM, half, args.size, seed + 1 + args.train_count).items
    )
    schedule = schedule_from(args)
    n_high = channels // 2 - 1
    tensors = _training_tensors(images, ranges_from(args, n_high), WaveletSpec(args.wavelet, args.levels), layout_d1(n_high))
    model = TinyDenoiser(channels, args.hidden, derive_seed(args.seed, "init"), schedule)
    model, losses = train(model, tensors, TrainingConfig(steps=args.train_steps), schedule, derive_seed(args.seed, "noise"))
    return model, losses


def cmd_sweep(run, cfg):
    a = run.args
    if a.high_ranges:
        raise StageError("config", "sweep derives high ranges per channel count; drop --high-ranges")
    models = {}
    if a.train_steps > 0:
        with run.stage("train"):
            for ch in a.channels:
                m, losses = _sweep_models(a, ch)
                models[ch] = (m, m)
                mio.write_loss_csv(run.path(f"loss_{ch}ch.csv"), losses)
    jobs = [(a, p, R, ch, models.get(ch)) for p in a.patterns for R in a.Rs for ch in a.channels]
    with run.stage("reconstruct"):
        if a.workers > 1:
            with ProcessPoolExecutor(a.workers) as pool:
                results = list(pool.map(_sweep_job, jobs))
        else:
            results = [_sweep_job(j) for j in jobs]
    with run.stage("write"):
        rows = [
            (p, R, ch, r.psnr, r.ssim, r.mse * MSE_SCALE, r.cell(), zf.cell())
            for p, R, ch, r, zf in results
        ]
        mio.write_csv(run.path("table_sweep.csv"), ["pattern", "R", "channels", "psnr", "ssim", "mse_e4", "cell", "zero_filled"], rows)
        ablation = []
        for p in a.patterns:
            for R in a.Rs:
                cells = {ch: r for pp, RR, ch, r, _ in results if pp == p and RR == R}
                for metric, fmt in (("PSNR", "{:.2f}"), ("SSIM", "{:.4f}"), ("MSE", "{:.3f}")):
                    vals = [
                        fmt.format({"PSNR": cells[ch].psnr, "SSIM": cells[ch].ssim, "MSE": cells[ch].mse * MSE_SCALE}[metric])
                        for ch in a.channels
                    ]
                    ablation.append([p, f"R={R:g}", metric] + vals)
        header = ["pattern", "AF", "metric"] + [f"{ch}-ch" for ch in a.channels]
        mio.write_csv(run.path("table_channels.csv"), header, ablation)
        mio.atomic_write(run.path("table_channels.txt"), format_table(header, ablation), mode="w")
    best = {}
    for p in a.patterns:
        for R in a.Rs:
            cand = [(r.psnr, ch) for pp, RR, ch, r, _ in results if pp == p and RR == R]
            best[f"{p}/R={R:g}"] = max(cand)[1]
    run.extra["best_channel_count_by_psnr"] = best
    print(format_table(header, ablation), end="")
    print("best channel count (PSNR):", best)


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    parser = build_parser()
    try:
        args, cfg = _apply_config(parser, argv)
    except (OSError, ValueError) as exc:
        print(f"error [config]: {exc}", file=sys.stderr)
        return 2
    run = None
    try:
        run = Run(args, argv)
        args.func(run, cfg)
        run.write_manifest()
    except StageError as exc:
        print(f"error {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error [{args.command}]: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
