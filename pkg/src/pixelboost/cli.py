"""Batch command-line front end.

Subcommands cover the whole pipeline: schedule tables, degradation,
forward simulation, training, super-resolution sampling, noise
analysis, metric reports, and a sigma sweep.  Every command is
byte-reproducible under a fixed ``--seed``.

Configuration precedence: command-line flags > ``--config`` JSON file >
``PIXELBOOST_SEED`` environment variable (seed only) > built-in
defaults.  Unknown config keys are hard errors.
"""

import argparse
import json
import os
import sys
from dataclasses import dataclass, fields
from typing import Optional

import numpy as np

from .analysis import HistogramSpec, noise_fit_report
from .denoiser import (TrainOptions, as_denoiser, load_checkpoint,
                       save_checkpoint, spec_for_images, train)
from .diffusion import (CONVENTIONS, WEIGHTINGS, forward_chain, make_config,
                        reverse_sample)
from .errors import PixelBoostError
from .imagedata import (bicubic_resize, make_lr_pair, read_image,
                        synth_dataset, write_image, SYNTH_KINDS)
from .metrics import edge_report, grid_csv, metric_report
from .noise import (STREAM_ANALYSIS, STREAM_DATASET, STREAM_FORWARD,
                    STREAM_SAMPLER, RngStream)
from .schedule import MODES, build_schedule

SEED_ENV = "PIXELBOOST_SEED"


class _UsageError(Exception):
    """Bad invocation or configuration; maps to exit code 2."""


@dataclass
class RunConfig:
    """Fully resolved settings for one command; every field has a default."""

    command: str = ""
    input: Optional[str] = None
    out: Optional[str] = None
    gt: Optional[str] = None
    test: Optional[str] = None
    manifest: Optional[str] = None
    checkpoint: Optional[str] = None
    sigmas: tuple = ()
    steps: int = 15
    t_mid: Optional[float] = None
    sigma: float = 1.5
    mode: str = "normalized"
    convention: str = "eq5_variance"
    seed: int = 0
    bins: int = 64
    grid: int = 64
    patch: int = 7
    train_steps: int = 500
    step_size: float = 0.01
    batch_size: int = 8
    hidden_width: int = 8
    weighting: str = "uniform_mse"
    kind: str = "mixed"
    count: int = 16
    size: int = 16
    eval_count: int = 4


_CONFIG_KEYS = {f.name for f in fields(RunConfig)} - {"command"}


def _parse_sigmas(value):
    if isinstance(value, (list, tuple)):
        items = value
    else:
        items = [s for s in str(value).split(",") if s.strip()]
    try:
        sigmas = tuple(float(s) for s in items)
    except ValueError as exc:
        raise _UsageError(f"bad --sigmas value: {exc}") from exc
    if not sigmas:
        raise _UsageError("--sigmas needs at least one value")
    return sigmas


def _resolve(args):
    """Merge flags, config file, environment, and defaults into a RunConfig."""
    file_cfg = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise _UsageError(f"cannot read config {args.config}: {exc}")
        if not isinstance(file_cfg, dict):
            raise _UsageError("config file must hold a JSON object")
        unknown = sorted(set(file_cfg) - _CONFIG_KEYS)
        if unknown:
            raise _UsageError(f"unknown config keys: {', '.join(unknown)}")

    cfg = RunConfig(command=args.command)
    for name in _CONFIG_KEYS:
        flag = getattr(args, name, None)
        if flag is not None:
            value = flag
        elif name in file_cfg:
            value = file_cfg[name]
        elif name == "seed" and SEED_ENV in os.environ:
            try:
                value = int(os.environ[SEED_ENV])
            except ValueError as exc:
                raise _UsageError(f"bad {SEED_ENV} value: {exc}")
        else:
            continue
        if name == "sigmas":
            value = _parse_sigmas(value)
        setattr(cfg, name, value)
    return cfg


def _require(cfg, *names):
    for name in names:
        if getattr(cfg, name) is None:
            flag = "--" + name.replace("_", "-")
            raise _UsageError(f"{cfg.command} requires {flag}")


def _write_text(path, text):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _img_name(stem, img):
    return stem + (".pgm" if img.shape[2] == 1 else ".ppm")


def _diffusion_config(cfg):
    return make_config(steps=cfg.steps, sigma=cfg.sigma, t_mid=cfg.t_mid,
                       mode=cfg.mode, convention=cfg.convention, seed=cfg.seed)


# --- subcommands ---------------------------------------------------------

def cmd_schedule(cfg):
    sched = build_schedule(cfg.steps, t_mid=cfg.t_mid, mode=cfg.mode)
    lines = ["t,eta,alpha"]
    for t in range(1, sched.steps + 1):
        lines.append(f"{t},{float(sched.etas[t])!r},{float(sched.alphas[t - 1])!r}")
    _write_text(cfg.out, "\n".join(lines) + "\n")
    return 0


def cmd_degrade(cfg):
    _require(cfg, "input", "out")
    hr = read_image(cfg.input)
    pair = make_lr_pair(hr)
    os.makedirs(cfg.out, exist_ok=True)
    write_image(pair.lr, os.path.join(cfg.out, _img_name("lr", pair.lr)))
    write_image(pair.lr_up, os.path.join(cfg.out, _img_name("lr_up", pair.lr_up)))
    with open(os.path.join(cfg.out, "delta0.f64"), "wb") as fh:
        fh.write(pair.delta0.astype("<f8").tobytes())
    return 0


def cmd_forward(cfg):
    _require(cfg, "input", "out")
    hr = read_image(cfg.input)
    pair = make_lr_pair(hr)
    dcfg = _diffusion_config(cfg)
    rng = RngStream(cfg.seed, STREAM_FORWARD)
    state = forward_chain(pair.hr, pair.delta0, dcfg, rng, keep_trajectory=True)
    os.makedirs(cfg.out, exist_ok=True)
    for t, frame in enumerate(state.trajectory):
        write_image(np.clip(frame, 0.0, 1.0),
                    os.path.join(cfg.out, _img_name(f"frame_{t:03d}", frame)))
    return 0


def _load_manifest(path):
    base = os.path.dirname(os.path.abspath(path))
    with open(path) as fh:
        names = [line.strip() for line in fh if line.strip()]
    if not names:
        raise _UsageError(f"manifest {path} lists no images")
    return [read_image(os.path.join(base, name)) for name in names]


def cmd_train(cfg):
    _require(cfg, "manifest", "checkpoint")
    images = _load_manifest(cfg.manifest)
    pairs = [make_lr_pair(hr) for hr in images]
    dataset = [(p.hr, p.lr_up) for p in pairs]
    dcfg = _diffusion_config(cfg)
    spec = spec_for_images("conv2", image_channels=dataset[0][0].shape[2],
                           hidden_width=cfg.hidden_width)
    opt = TrainOptions(step_size=cfg.step_size, steps=cfg.train_steps,
                       batch_size=cfg.batch_size, weighting=cfg.weighting)
    ckpt, history = train(dataset, dcfg, opt, spec)
    save_checkpoint(ckpt, cfg.checkpoint)
    if cfg.out is not None:
        rows = ["step,loss"]
        rows += [f"{i},{float(loss)!r}" for i, loss in enumerate(history)]
        _write_text(cfg.out, "\n".join(rows) + "\n")
    return 0


def cmd_sr(cfg):
    _require(cfg, "input", "checkpoint", "out")
    lr = read_image(cfg.input)
    ckpt = load_checkpoint(cfg.checkpoint)
    tc = ckpt.train_config
    dcfg = make_config(steps=int(tc["steps"]), sigma=float(tc["sigma"]),
                       t_mid=tc["t_mid"], mode=tc["mode"],
                       convention=tc.get("convention", "eq5_variance"),
                       seed=cfg.seed)
    lr_up = bicubic_resize(lr, 4)
    rng = RngStream(cfg.seed, STREAM_SAMPLER)
    sr, _ = reverse_sample(lr_up, as_denoiser(ckpt), dcfg, rng)
    write_image(sr, cfg.out)
    return 0


def cmd_analyze_noise(cfg):
    if cfg.input is not None:
        sample = np.fromfile(cfg.input, dtype="<f8")
    elif cfg.gt is not None and cfg.test is not None:
        sample = (read_image(cfg.test) - read_image(cfg.gt)).ravel()
    else:
        raise _UsageError("analyze-noise needs --input or both --gt and --test")
    rng = RngStream(cfg.seed, STREAM_ANALYSIS)
    report = noise_fit_report(sample, cfg.sigma, rng,
                              HistogramSpec(bin_count=cfg.bins))
    _write_text(cfg.out, report.csv())
    return 0


def cmd_metrics(cfg):
    _require(cfg, "gt", "test")
    gt = read_image(cfg.gt)
    test = read_image(cfg.test)
    report = metric_report(gt, test, gt_id=cfg.gt, test_id=cfg.test,
                           grid=cfg.grid)
    _write_text(cfg.out, report.csv())
    return 0


def cmd_edge_report(cfg):
    _require(cfg, "gt", "test", "out")
    gt = read_image(cfg.gt)
    test = read_image(cfg.test)
    report = edge_report(test, gt, patch=cfg.patch)
    os.makedirs(cfg.out, exist_ok=True)
    _write_text(os.path.join(cfg.out, "patch_means_test.csv"),
                grid_csv(report.patch_means_a))
    _write_text(os.path.join(cfg.out, "patch_means_gt.csv"),
                grid_csv(report.patch_means_b))
    _write_text(os.path.join(cfg.out, "patch_diff.csv"), grid_csv(report.diff))
    return 0


def cmd_sweep(cfg):
    if not cfg.sigmas:
        raise _UsageError("sweep requires --sigmas")
    data_rng = RngStream(cfg.seed, STREAM_DATASET)
    images = synth_dataset(cfg.kind, cfg.count + cfg.eval_count, cfg.size,
                           data_rng)
    pairs = [make_lr_pair(hr) for hr in images]
    train_set = [(p.hr, p.lr_up) for p in pairs[: cfg.count]]
    eval_pairs = pairs[cfg.count:]
    spec = spec_for_images("conv2", image_channels=images[0].shape[2],
                           hidden_width=cfg.hidden_width)
    opt = TrainOptions(step_size=cfg.step_size, steps=cfg.train_steps,
                       batch_size=cfg.batch_size, weighting=cfg.weighting)
    rows = ["sigma,psnr_db,ssim,loe"]
    for i, sigma in enumerate(cfg.sigmas):
        dcfg = make_config(steps=cfg.steps, sigma=sigma, t_mid=cfg.t_mid,
                           mode=cfg.mode, convention=cfg.convention,
                           seed=cfg.seed)
        ckpt, _ = train(train_set, dcfg, opt, spec)
        scores = []
        for j, pair in enumerate(eval_pairs):
            rng = RngStream(cfg.seed, STREAM_SAMPLER).substream(i * 1000 + j)
            sr, _ = reverse_sample(pair.lr_up, as_denoiser(ckpt), dcfg, rng)
            rep = metric_report(pair.hr, sr, grid=cfg.grid)
            scores.append((rep.psnr_db, rep.ssim, rep.loe))
        means = [float(v) for v in np.mean(np.array(scores, dtype=np.float64), axis=0)]
        rows.append(f"{float(sigma)!r},{means[0]!r},{means[1]!r},{means[2]!r}")
    _write_text(cfg.out, "\n".join(rows) + "\n")
    return 0


_COMMANDS = {
    "schedule": cmd_schedule,
    "degrade": cmd_degrade,
    "forward": cmd_forward,
    "train": cmd_train,
    "sr": cmd_sr,
    "analyze-noise": cmd_analyze_noise,
    "metrics": cmd_metrics,
    "edge-report": cmd_edge_report,
    "sweep": cmd_sweep,
}


def _add_common(sub):
    sub.add_argument("--config", help="JSON config file (flags still win)")
    sub.add_argument("--seed", type=int)
    sub.add_argument("--out")


def _add_diffusion(sub):
    sub.add_argument("--steps", type=int)
    sub.add_argument("--t-mid", type=float)
    sub.add_argument("--sigma", type=float)
    sub.add_argument("--mode", choices=MODES)
    sub.add_argument("--convention", choices=CONVENTIONS)


def _add_training(sub):
    sub.add_argument("--train-steps", type=int)
    sub.add_argument("--step-size", type=float)
    sub.add_argument("--batch-size", type=int)
    sub.add_argument("--hidden-width", type=int)
    sub.add_argument("--weighting", choices=WEIGHTINGS)


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="pixelboost",
        description="Brownian residual-shifting super-resolution toolkit")
    subs = parser.add_subparsers(dest="command", metavar="command")

    p = subs.add_parser("schedule", help="dump the shifting sequence as CSV")
    _add_common(p); _add_diffusion(p)

    p = subs.add_parser("degrade", help="write LR / LR-up / residual for an image")
    _add_common(p)
    p.add_argument("--input", help="HR image (PGM/PPM)")

    p = subs.add_parser("forward", help="simulate the forward chain, dump frames")
    _add_common(p); _add_diffusion(p)
    p.add_argument("--input", help="HR image (PGM/PPM)")

    p = subs.add_parser("train", help="train a denoiser from a manifest")
    _add_common(p); _add_diffusion(p); _add_training(p)
    p.add_argument("--manifest", help="text file, one image path per line")
    p.add_argument("--checkpoint", help="output checkpoint path")

    p = subs.add_parser("sr", help="super-resolve an LR image with a checkpoint")
    _add_common(p)
    p.add_argument("--input", help="LR image (PGM/PPM)")
    p.add_argument("--checkpoint", help="trained checkpoint path")

    p = subs.add_parser("analyze-noise", help="rank noise families for a residual")
    _add_common(p)
    p.add_argument("--input", help="flat binary of little-endian float64")
    p.add_argument("--gt"); p.add_argument("--test")
    p.add_argument("--sigma", type=float)
    p.add_argument("--bins", type=int)

    p = subs.add_parser("metrics", help="PSNR/SSIM/LOE for an image pair")
    _add_common(p)
    p.add_argument("--gt"); p.add_argument("--test")
    p.add_argument("--grid", type=int)

    p = subs.add_parser("edge-report", help="per-patch Sobel magnitude grids")
    _add_common(p)
    p.add_argument("--gt"); p.add_argument("--test")
    p.add_argument("--patch", type=int)

    p = subs.add_parser("sweep", help="train/sample/score across sigma values")
    _add_common(p); _add_diffusion(p); _add_training(p)
    p.add_argument("--sigmas", help="comma-separated sigma list")
    p.add_argument("--kind", choices=SYNTH_KINDS)
    p.add_argument("--count", type=int)
    p.add_argument("--size", type=int)
    p.add_argument("--eval-count", type=int)
    p.add_argument("--grid", type=int)

    return parser


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        cfg = _resolve(args)
        return _COMMANDS[cfg.command](cfg)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (PixelBoostError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
