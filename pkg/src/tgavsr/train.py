"""Supervised training: L1 loss, Adam, staircase schedule, resumable checkpoints."""
from __future__ import annotations

import csv
import glob
import logging
import math
import os
import re
import shutil
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import torch

from .align import align_sequence
from .config import RunConfig, TrainConfig
from .core.checkpoint import read_checkpoint, save_checkpoint
from .core.network import TGANet
from .core.resample import bicubic_upsample
from .data.degrade import degrade_hr_to_lr
from .data.samples import make_training_sample
from .errors import InvalidInputError, NonFiniteLossError
from .evaluation.metrics import MetricReport
from .infer import super_resolve

log = logging.getLogger(__name__)

LOG_COLUMNS = ["epoch", "step", "lr", "train_loss", "val_psnr_y", "val_ssim_y"]


def l1_loss(pred, target):
    if pred.shape != target.shape:
        raise InvalidInputError(f"shape mismatch: {tuple(pred.shape)} vs {tuple(target.shape)}")
    return (pred - target).abs().mean()


def lr_schedule(epoch, cfg: TrainConfig):
    return cfg.lr * cfg.lr_decay ** (epoch // cfg.decay_every)


def make_optimizer(model, cfg: TrainConfig):
    # torch's Adam adds weight_decay * param to the gradient (coupled L2)
    return torch.optim.Adam(model.parameters(), lr=cfg.lr, betas=(cfg.beta1, cfg.beta2),
                            weight_decay=cfg.weight_decay)


def train_step(model, optimizer, batch, lr, epoch=0, step=0):
    """One Adam update on ``batch = (lr_frames [B,T,3,h,w], hr [B,3,H,W])``; returns the loss."""
    lr_frames, hr = (torch.as_tensor(b) for b in batch)
    for group in optimizer.param_groups:
        group["lr"] = lr
    model.train()
    optimizer.zero_grad(set_to_none=True)
    loss = l1_loss(model(lr_frames), hr)
    value = float(loss.detach())
    if not math.isfinite(value):
        raise NonFiniteLossError(epoch, step, lr, value)
    loss.backward()
    optimizer.step()
    return value


def sample_seed(seed, epoch, step, item):
    return np.random.SeedSequence([seed, epoch, step, item])


def num_workers(cfg: TrainConfig):
    cap = os.environ.get("TGA_NUM_WORKERS")
    n = cfg.num_workers
    if cap is not None:
        n = min(n, int(cap))
    return max(0, n)


def make_batch(videos, cfg: RunConfig, epoch, step):
    """Deterministic batch for (seed, epoch, step); items are independent of worker count."""
    t = cfg.train
    crop = t.patch_size * cfg.model.scale
    usable = [v for v in videos if len(v) >= cfg.model.num_frames and min(v.shape[-2:]) >= crop]
    if not usable:
        raise InvalidInputError(
            f"no training clip has {cfg.model.num_frames} frames of at least {crop}x{crop}")
    p = 0.5 if t.augment else 0.0

    def item(i):
        ss = sample_seed(t.seed, epoch, step, i)
        video = usable[int(np.random.default_rng(ss).integers(len(usable)))]
        seq, hr = make_training_sample(video, ss.spawn(1)[0], cfg.degradation,
                                       cfg.model.num_frames, crop, flip_p=p, rot_p=p)
        frames = align_sequence(seq, cfg.align).frames.frames if cfg.align.enabled else seq.frames
        return frames, hr

    workers = num_workers(t)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            items = list(pool.map(item, range(t.batch_size)))
    else:
        items = [item(i) for i in range(t.batch_size)]
    return (np.stack([f for f, _ in items]).astype(np.float32),
            np.stack([h for _, h in items]).astype(np.float32))


def evaluate_videos(model, videos, cfg: RunConfig, names=None):
    """Y-channel PSNR/SSIM of the model and of bicubic on HR videos (degraded on the fly)."""
    reports = {"model": [], "bicubic": []}
    for k, hr in enumerate(videos):
        lr = degrade_hr_to_lr(hr, cfg.degradation)
        sr = super_resolve(model, lr, cfg.align if cfg.align.enabled else None)
        bic = bicubic_upsample(lr, cfg.model.scale)
        name = names[k] if names else f"clip{k}"
        for method, pred in (("model", sr), ("bicubic", bic)):
            rep = MetricReport("y", 0, method, name)
            for t in range(len(hr)):
                rep.add(str(t), np.clip(pred[t], 0, 1), hr[t])
            reports[method].append(rep)
    return reports


def _mean(reports, attr):
    vals = [getattr(r, attr) for r in reports]
    return float(np.mean(vals)) if vals else math.nan


def latest_checkpoint(out_dir):
    found = []
    for path in glob.glob(os.path.join(out_dir, "ckpt_epoch*.bin")):
        m = re.search(r"ckpt_epoch(\d+)\.bin$", path)
        if m:
            found.append((int(m.group(1)), path))
    return max(found)[1] if found else None


def fit(train_videos, val_videos, cfg: RunConfig, out_dir, resume=True, progress=None):
    """Run the epoch loop; returns the list of metric-log rows.

    ``train_videos`` / ``val_videos`` are lists of HR ``[T, 3, H, W]`` arrays.
    Epoch ``e`` writes ``ckpt_epoch{e}.bin``; ``best.bin`` tracks the best
    validation Y-PSNR (or the latest epoch without a validation set). State
    needed to resume (optimizer moments, epoch, RNG) travels with every
    checkpoint, and batches depend only on (seed, epoch, step), so resuming
    reproduces an uninterrupted run.
    """
    if not train_videos:
        raise InvalidInputError("training set is empty")
    cfg.validate()
    t = cfg.train
    os.makedirs(out_dir, exist_ok=True)
    log_path = os.path.join(out_dir, "metrics.csv")
    torch.manual_seed(t.seed)
    model = TGANet(cfg.model)
    optimizer = make_optimizer(model, t)
    start, best, rows = 0, -math.inf, []

    ckpt = latest_checkpoint(out_dir) if resume else None
    if ckpt:
        state = read_checkpoint(ckpt)
        model.load_state_dict(state["state_dict"])
        optimizer.load_state_dict(state["optimizer"])
        torch.set_rng_state(state["torch_rng"])
        start, best = state["epoch"] + 1, state["best"]
        rows = [r for r in _read_log(log_path) if int(r["epoch"]) < start]
        log.info("resuming from %s at epoch %d", ckpt, start)
    _write_log(log_path, rows)

    iters = t.iters_per_epoch or max(1, math.ceil(len(train_videos) / t.batch_size))
    for epoch in range(start, t.epochs):
        lr = lr_schedule(epoch, t)
        losses = []
        for step in range(iters):
            batch = make_batch(train_videos, cfg, epoch, step)
            losses.append(train_step(model, optimizer, batch, lr, epoch, step))
            if progress:
                progress(epoch, step, losses[-1])
        row = {"epoch": epoch, "step": (epoch + 1) * iters, "lr": f"{lr:.6g}",
               "train_loss": f"{np.mean(losses):.8f}", "val_psnr_y": "", "val_ssim_y": ""}
        score = None
        if val_videos and (epoch + 1) % t.val_interval == 0:
            reps = evaluate_videos(model, val_videos, cfg)["model"]
            score = _mean(reps, "psnr")
            row["val_psnr_y"] = f"{score:.4f}"
            row["val_ssim_y"] = f"{_mean(reps, 'ssim'):.4f}"
        path = os.path.join(out_dir, f"ckpt_epoch{epoch}.bin")
        is_best = score is None and not val_videos or (score is not None and score > best)
        if score is not None and score > best:
            best = score
        save_checkpoint(path, model, optimizer=optimizer.state_dict(), epoch=epoch, best=best,
                        torch_rng=torch.get_rng_state(), run_config=cfg.dumps())
        if is_best:
            shutil.copyfile(path, os.path.join(out_dir, "best.bin"))
        rows.append(row)
        _append_log(log_path, row)
        log.info("epoch %d lr %.3g loss %s val %s", epoch, lr, row["train_loss"], row["val_psnr_y"])
    return model, rows


def _read_log(path):
    if not os.path.exists(path):
        return []
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _write_log(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=LOG_COLUMNS)
        w.writeheader()
        w.writerows(rows)


def _append_log(path, row):
    with open(path, "a", newline="") as fh:
        csv.DictWriter(fh, fieldnames=LOG_COLUMNS).writerow(row)
