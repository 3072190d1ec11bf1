"""Command-line entry point: ``tgavsr {degrade,train,infer,align,eval,profile,synth}``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric failure.
"""
from __future__ import annotations

import argparse
import configparser
import dataclasses
import json
import logging
import os
import sys
import time

import numpy as np

from .config import PRESETS, RunConfig
from .errors import ConfigError, DataError, InvalidInputError, NonFiniteLossError

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

log = logging.getLogger("tgavsr")


# -- configuration plumbing ------------------------------------------------------

def add_config_args(p):
    p.add_argument("--config", help="sectioned key = value file")
    p.add_argument("--preset", choices=sorted(PRESETS), help="start from a named preset")
    g = p.add_argument_group("config keys (override file/preset values)")
    ref = RunConfig()
    for key in ref.keys():
        section, name = key.split(".")
        default = getattr(getattr(ref, section), name)
        g.add_argument(f"--{key}", dest=f"cfg:{key}", metavar=type(default).__name__.upper(),
                       help=f"default {default!r}")
    g.add_argument("--frames", dest="cfg:model.num_frames", help="alias of --model.num_frames")
    g.add_argument("--no-attention", dest="cfg:model.attention", action="store_const",
                   const="false", help="disable group attention")
    g.add_argument("--grouping", dest="cfg:model.grouping", help="alias of --model.grouping")
    g.add_argument("--seed", dest="cfg:train.seed", help="alias of --train.seed")
    g.add_argument("--epochs", dest="cfg:train.epochs", help="alias of --train.epochs")


def build_config(args):
    cfg = PRESETS[args.preset]() if getattr(args, "preset", None) else RunConfig()
    problems = []
    if getattr(args, "config", None):
        try:
            cfg = RunConfig.load(args.config, base=cfg)
        except ConfigError as exc:
            problems += exc.problems
        except (OSError, configparser.Error) as exc:
            problems.append(f"cannot read config {args.config}: {exc}")
    for dest, value in vars(args).items():
        if dest.startswith("cfg:") and value is not None:
            try:
                cfg.set(dest[4:], value)
            except ConfigError as exc:
                problems += exc.problems
    problems += cfg.problems()
    if problems:
        raise ConfigError(problems)
    return cfg


def require_dir(path, what):
    if not os.path.isdir(path):
        raise ConfigError(f"{what} {path!r} is not a directory")


# -- commands -------------------------------------------------------------------------

def _png_files(root):
    for dirpath, _, names in sorted(os.walk(root)):
        for n in sorted(names):
            if n.lower().endswith(".png"):
                yield os.path.join(dirpath, n)


def cmd_degrade(args):
    from .config import DegradationSpec
    from .data.degrade import degrade_hr_to_lr
    from .data.io import read_manifest, read_png, write_png

    spec = DegradationSpec(sigma=args.sigma, scale=args.scale, kernel_size=args.kernel_size)
    if spec.problems():
        raise ConfigError(spec.problems())
    if os.path.isfile(args.input):
        roots = [c.path for c in read_manifest(args.input)]
        base = os.path.dirname(os.path.abspath(args.input))
    else:
        require_dir(args.input, "input")
        roots, base = [args.input], args.input
    count = 0
    for root in roots:
        for src in _png_files(root):
            hr = read_png(src)
            try:
                lr = degrade_hr_to_lr(hr, spec)
            except InvalidInputError as exc:
                raise DataError(f"{src}: {exc}") from exc
            dst = os.path.join(args.output, os.path.relpath(os.path.abspath(src), os.path.abspath(base)))
            os.makedirs(os.path.dirname(dst), exist_ok=True)
            write_png(dst, lr)
            count += 1
    print(f"wrote {count} LR frames to {args.output}")
    return EXIT_OK


def _load_videos(manifest, split=None):
    from .data.io import read_manifest

    records = read_manifest(manifest, split)
    return [r.load() for r in records], [os.path.basename(r.path.rstrip("/")) for r in records]


def cmd_train(args):
    from .train import fit

    cfg = build_config(args)
    out = args.out or cfg.paths.checkpoint_dir
    if args.train_manifest:
        cfg.paths.train_manifest = args.train_manifest
    if args.val_manifest:
        cfg.paths.val_manifest = args.val_manifest
    if args.synthetic:
        from .data.synthetic import write_synthetic_dataset

        side = max(128, cfg.train.patch_size * cfg.model.scale)
        cfg.paths.train_manifest = write_synthetic_dataset(
            os.path.join(out, "synthetic"), n_clips=args.synthetic,
            n_frames=cfg.model.num_frames + 2, height=side, width=side, seed=cfg.train.seed)
    if not cfg.paths.train_manifest:
        raise ConfigError("a training manifest is required (--train-manifest or --synthetic)")
    if not os.path.isfile(cfg.paths.train_manifest):
        raise ConfigError(f"training manifest {cfg.paths.train_manifest!r} does not exist")
    train, _ = _load_videos(cfg.paths.train_manifest)
    val = _load_videos(cfg.paths.val_manifest)[0] if cfg.paths.val_manifest else []
    os.makedirs(out, exist_ok=True)
    cfg.save(os.path.join(out, "run.cfg"))
    t0 = time.time()
    _, rows = fit(train, val, cfg, out, resume=not args.no_resume)
    print(f"trained {len(rows)} epochs in {time.time() - t0:.1f}s; checkpoints in {out}")
    return EXIT_OK


def _read_video(directory):
    from .data.io import list_frames, read_png

    require_dir(directory, "input")
    paths = list_frames(directory)
    if not paths:
        raise DataError(f"no frame_*.png files in {directory}")
    return np.stack([read_png(p) for p in paths])


def cmd_infer(args):
    from .align import PairwiseCache
    from .core.checkpoint import load_checkpoint
    from .data.io import FRAME_PATTERN, write_png
    from .evaluation.visualize import export_attention
    from .infer import super_resolve

    if not os.path.isfile(args.checkpoint):
        raise ConfigError(f"checkpoint {args.checkpoint!r} does not exist")
    cfg = build_config(args)
    # the checkpoint carries its own architecture unless a config/preset is given
    try:
        model, _ = load_checkpoint(args.checkpoint, cfg.model if (args.config or args.preset) else None)
    except InvalidInputError as exc:
        raise ConfigError(str(exc)) from exc
    video = _read_video(args.input)
    align = None
    cache = None
    if args.align:
        align = dataclasses.replace(cfg.align, enabled=True)
        cache = PairwiseCache(align)
        if args.homography_cache and os.path.exists(args.homography_cache):
            cache.load(args.homography_cache)
    os.makedirs(args.output, exist_ok=True)

    def save(t, window, out):
        write_png(os.path.join(args.output, FRAME_PATTERN.format(t)), np.clip(out, 0, 1))
        if args.dump_attention:
            export_attention(model, window, args.dump_attention, prefix=f"frame_{t:05d}_mask")

    super_resolve(model, video, align, callback=save, cache=cache)
    if cache is not None:
        if args.homography_cache:
            cache.save(args.homography_cache)
        print(f"{cache.estimations} pairwise estimations for {len(video)} frames")
    print(f"wrote {len(video)} frames to {args.output}")
    return EXIT_OK


def cmd_align(args):
    from .align import KEPT, VideoAligner
    from .data.io import FRAME_PATTERN, window_indices, write_png

    cfg = build_config(args)
    video = _read_video(args.input)
    aligner = VideoAligner(video, cfg.align)
    n = cfg.model.num_frames
    if args.sidecar and os.path.exists(args.sidecar) and not args.recompute:
        aligner.cache.load(args.sidecar)
    os.makedirs(args.output, exist_ok=True)
    centres = range(len(video)) if args.reference is None else [args.reference]
    summary = []
    for c in centres:
        idx = window_indices(c, n, len(video))
        res = aligner.window(idx)
        if args.reference is not None or args.write_windows:
            d = os.path.join(args.output, f"window_{c:05d}")
            os.makedirs(d, exist_ok=True)
            for k, f in enumerate(res.frames.frames):
                write_png(os.path.join(d, FRAME_PATTERN.format(k)), f)
                write_png(os.path.join(d, f"mask_{k:05d}.png"), res.masks[k].astype(np.float32))
        summary.append((c, sum(s != KEPT for s in res.status)))
    sidecar = args.sidecar or os.path.join(args.output, "homographies.txt")
    aligner.cache.save(sidecar)
    print(f"{aligner.estimations} pairwise estimations, sidecar {sidecar}")
    for c, k in summary[:10]:
        print(f"window {c}: {k}/{n - 1} neighbours aligned")
    return EXIT_OK


def cmd_eval(args):
    from .core.resample import bicubic_upsample
    from .evaluation.metrics import MetricReport, format_table, write_csv

    gt = _read_video(args.gt)
    comparisons = []
    if args.pred:
        comparisons.append((args.method, _read_video(args.pred)))
    if args.lr:
        lr = _read_video(args.lr)
        scale = gt.shape[-1] // lr.shape[-1]
        comparisons.append(("Bicubic", np.clip(bicubic_upsample(lr, scale), 0, 1)))
    if not comparisons:
        raise ConfigError("nothing to evaluate: give --pred and/or --lr")
    crops = sorted(set(args.crop or [0]) | ({args.duf_crop} if args.duf_crop is not None else set()))
    channels = ["y", "rgb"] if args.channel == "both" else [args.channel]
    clip = args.clip or os.path.basename(os.path.normpath(args.gt))
    reports = []
    for method, pred in comparisons:
        if pred.shape != gt.shape:
            raise DataError(f"{method}: {len(pred)} frames of {pred.shape[1:]} vs ground truth "
                            f"{len(gt)} frames of {gt.shape[1:]}")
        for ch in channels:
            for crop in crops:
                rep = MetricReport(ch, crop, method, clip)
                for t in range(len(gt)):
                    rep.add(f"{t:05d}", pred[t], gt[t])
                reports.append(rep)
    if args.csv:
        write_csv(args.csv, reports, per_frame=not args.summary_only)
    else:
        write_csv(sys.stdout, reports, per_frame=not args.summary_only)
    print(format_table(reports), file=sys.stderr)
    return EXIT_OK


def cmd_profile(args):
    from .evaluation.stats import model_stats

    cfg = build_config(args)
    try:
        w, h = (int(v) for v in args.size.lower().split("x"))
    except ValueError:
        raise ConfigError(f"--size must look like 112x64, got {args.size!r}") from None
    t0 = time.time()
    stats = model_stats(cfg.model, (w, h))
    payload = {"params": stats.params, "flops": stats.flops, "width": w, "height": h,
               "num_frames": cfg.model.num_frames, "seconds": round(time.time() - t0, 3)}
    if args.json:
        print(json.dumps(payload))
    else:
        print(f"params {stats.params:,} ({stats.params / 1e6:.2f}M)")
        print(f"FLOPs  {stats.flops:,} ({stats.flops / 1e12:.4f}T) on a {w}x{h} LR input "
              f"of {cfg.model.num_frames} frames (1 MAC = 2 FLOPs)")
    return EXIT_OK


def cmd_synth(args):
    from .data.synthetic import write_synthetic_dataset

    manifest = write_synthetic_dataset(args.output, args.clips, args.frames, args.size, args.size,
                                       args.seed)
    print(manifest)
    return EXIT_OK


# -- parser ----------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="tgavsr", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("degrade", help="blur + decimate HR frames into LR frames")
    s.add_argument("input", help="HR frame tree or dataset manifest")
    s.add_argument("output")
    s.add_argument("--sigma", type=float, default=1.6)
    s.add_argument("--scale", type=int, default=4)
    s.add_argument("--kernel-size", type=int, default=13)
    s.set_defaults(func=cmd_degrade)

    s = sub.add_parser("train", help="train a model")
    add_config_args(s)
    s.add_argument("--train-manifest")
    s.add_argument("--val-manifest")
    s.add_argument("--out", help="checkpoint directory (default paths.checkpoint_dir)")
    s.add_argument("--synthetic", type=int, metavar="N", help="train on N generated clips")
    s.add_argument("--no-resume", action="store_true")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("infer", help="super-resolve a directory of LR frames")
    add_config_args(s)
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--input", required=True)
    s.add_argument("--output", required=True)
    s.add_argument("--align", action="store_true", help="pre-align windows with chained homographies")
    s.add_argument("--homography-cache", help="sidecar file to reuse/store pair estimates")
    s.add_argument("--dump-attention", metavar="DIR", help="write attention masks per frame")
    s.set_defaults(func=cmd_infer)

    s = sub.add_parser("align", help="estimate consecutive homographies and align windows")
    add_config_args(s)
    s.add_argument("input")
    s.add_argument("output")
    s.add_argument("--reference", type=int, help="only align the window centred here")
    s.add_argument("--write-windows", action="store_true")
    s.add_argument("--sidecar")
    s.add_argument("--recompute", action="store_true", help="ignore an existing sidecar")
    s.set_defaults(func=cmd_align)

    s = sub.add_parser("eval", help="PSNR / SSIM of predictions against ground truth")
    s.add_argument("--pred")
    s.add_argument("--gt", required=True)
    s.add_argument("--lr", help="LR frames; adds a bicubic comparator row")
    s.add_argument("--channel", choices=["y", "rgb", "both"], default="y")
    s.add_argument("--crop", type=int, action="append", help="border crop in pixels (repeatable)")
    s.add_argument("--duf-crop", type=int, nargs="?", const=8, metavar="N",
                   help="also report an N-pixel border crop (default 8)")
    s.add_argument("--method", default="TGA")
    s.add_argument("--clip")
    s.add_argument("--csv")
    s.add_argument("--summary-only", action="store_true")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("profile", help="parameter and FLOP count")
    add_config_args(s)
    s.add_argument("--size", default="112x64", help="LR input WxH")
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_profile)

    s = sub.add_parser("synth", help="write procedural training clips")
    s.add_argument("output")
    s.add_argument("--clips", type=int, default=4)
    s.add_argument("--frames", type=int, default=9)
    s.add_argument("--size", type=int, default=128)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_synth)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, InvalidInputError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NonFiniteLossError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
