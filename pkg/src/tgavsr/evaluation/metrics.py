"""PSNR / SSIM on luma or RGB, following the usual VSR reporting conventions."""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from ..errors import InvalidInputError

# ITU-R BT.601 studio swing, RGB in [0, 1] -> Y on the 0-255 scale
_STUDIO = np.array([65.481, 128.553, 24.966])
_FULL = np.array([0.299, 0.587, 0.114]) * 255.0


def to_luma(frame, swing="studio"):
    """[3, H, W] RGB in [0, 1] -> [H, W] luma in [0, 1]."""
    frame = np.asarray(frame, dtype=np.float64)
    if frame.ndim < 1 or frame.shape[0] != 3:
        raise InvalidInputError(f"to_luma expects 3 channels first, got shape {frame.shape}")
    if swing == "studio":
        y = 16.0 + np.tensordot(_STUDIO, frame, axes=1)
    elif swing == "full":
        y = np.tensordot(_FULL, frame, axes=1)
    else:
        raise InvalidInputError(f"unknown swing {swing!r}")
    return y / 255.0


def _crop(a, border):
    if border == 0:
        return a
    h, w = a.shape[-2:]
    if 2 * border >= min(h, w):
        raise InvalidInputError(f"crop {border} too large for {h}x{w}")
    return a[..., border:h - border, border:w - border]


def _pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise InvalidInputError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def psnr(a, b, border_crop=0, data_range=1.0):
    """Peak signal-to-noise ratio in dB; ``inf`` for identical inputs."""
    a, b = _pair(a, b)
    mse = np.mean((_crop(a, border_crop) - _crop(b, border_crop)) ** 2)
    if mse == 0:
        return math.inf
    return float(10.0 * np.log10(data_range ** 2 / mse))


def gaussian_window(size=11, sigma=1.5):
    x = np.arange(size) - size // 2
    g = np.exp(-x ** 2 / (2 * sigma ** 2))
    return g / g.sum()


def _ssim_2d(a, b, win, c1, c2):
    half = len(win) // 2

    def filt(x):
        x = ndimage.correlate1d(x, win, axis=0, mode="constant")
        x = ndimage.correlate1d(x, win, axis=1, mode="constant")
        return x[half:x.shape[0] - half, half:x.shape[1] - half]

    mu_a, mu_b = filt(a), filt(b)
    var_a = filt(a * a) - mu_a ** 2
    var_b = filt(b * b) - mu_b ** 2
    cov = filt(a * b) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def ssim(a, b, border_crop=0, data_range=1.0, window=11, sigma=1.5, k1=0.01, k2=0.03):
    """Single-scale Gaussian-window SSIM averaged over fully-covered positions.

    Multi-channel inputs ``[C, H, W]`` are scored per channel and averaged.
    """
    a, b = _pair(a, b)
    a, b = _crop(a, border_crop), _crop(b, border_crop)
    if min(a.shape[-2:]) < window:
        raise InvalidInputError(f"image {a.shape[-2:]} smaller than the {window}x{window} window")
    win = gaussian_window(window, sigma)
    c1, c2 = (k1 * data_range) ** 2, (k2 * data_range) ** 2
    if a.ndim == 2:
        return _ssim_2d(a, b, win, c1, c2)
    return float(np.mean([_ssim_2d(x, y, win, c1, c2) for x, y in zip(a.reshape(-1, *a.shape[-2:]),
                                                                     b.reshape(-1, *b.shape[-2:]))]))


def frame_scores(pred, gt, channel="y", border_crop=0):
    if channel == "y":
        pred, gt = to_luma(pred), to_luma(gt)
    elif channel != "rgb":
        raise InvalidInputError(f"channel must be 'y' or 'rgb', got {channel!r}")
    return psnr(pred, gt, border_crop), ssim(pred, gt, border_crop)


@dataclass
class MetricReport:
    channel: str
    border_crop: int
    method: str = ""
    clip: str = ""
    policy: str = "all frames"
    frames: list = field(default_factory=list)   # (name, psnr, ssim)

    def add(self, name, pred, gt):
        p, s = frame_scores(pred, gt, self.channel, self.border_crop)
        self.frames.append((name, p, s))
        return p, s

    @property
    def psnr(self):
        return float(np.mean([f[1] for f in self.frames])) if self.frames else math.nan

    @property
    def ssim(self):
        return float(np.mean([f[2] for f in self.frames])) if self.frames else math.nan

    def rows(self, per_frame=True):
        base = {"method": self.method, "clip": self.clip, "channel": self.channel.upper(),
                "crop": self.border_crop}
        out = []
        if per_frame:
            out += [{**base, "frame": n, "psnr": _fmt(p), "ssim": f"{s:.4f}"} for n, p, s in self.frames]
        out.append({**base, "frame": "mean", "psnr": _fmt(self.psnr), "ssim": f"{self.ssim:.4f}"})
        return out


COLUMNS = ["method", "clip", "channel", "crop", "frame", "psnr", "ssim"]


def _fmt(v):
    return "inf" if math.isinf(v) else f"{v:.2f}"


def write_csv(path_or_file, reports, per_frame=True):
    own = isinstance(path_or_file, (str, os.PathLike))
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        writer = csv.DictWriter(fh, fieldnames=COLUMNS)
        writer.writeheader()
        for r in reports:
            writer.writerows(r.rows(per_frame))
    finally:
        if own:
            fh.close()


def format_table(reports):
    lines = [f"{'method':<12} {'clip':<16} {'chan':<4} {'crop':>4}  {'PSNR/SSIM':>16}"]
    for r in reports:
        lines.append(f"{r.method:<12} {r.clip:<16} {r.channel.upper():<4} {r.border_crop:>4}  "
                     f"{_fmt(r.psnr):>7}/{r.ssim:.4f}")
    return "\n".join(lines)
