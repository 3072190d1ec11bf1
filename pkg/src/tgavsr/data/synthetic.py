"""Procedural clips: textured canvases moved by known transforms."""
from __future__ import annotations

import os

import numpy as np
from scipy import ndimage

from ..kernels import warp_bilinear
from .io import FRAME_PATTERN, write_manifest, write_png


def texture(height, width, rng, n_shapes=40):
    """Smooth multi-scale colour noise with sharp-edged shapes on top, values in [0, 1]."""
    img = np.zeros((3, height, width))
    for sigma, amp in ((12.0, 0.5), (4.0, 0.3), (1.5, 0.2)):
        noise = rng.standard_normal((3, height, width))
        noise = ndimage.gaussian_filter(noise, (0, sigma, sigma), mode="wrap")
        img += amp * noise / (noise.std() + 1e-12)
    img = 0.5 + 0.18 * img
    yy, xx = np.mgrid[0:height, 0:width]
    for _ in range(n_shapes):
        color = rng.random(3)
        cy, cx = rng.random(2) * [height, width]
        size = rng.uniform(3, max(4.0, min(height, width) / 6))
        if rng.random() < 0.5:
            m = (np.abs(yy - cy) < size) & (np.abs(xx - cx) < size * rng.uniform(0.3, 1.5))
        else:
            m = (yy - cy) ** 2 + (xx - cx) ** 2 < size ** 2
        img[:, m] = 0.6 * color[:, None] + 0.4 * img[:, m]
    return np.clip(img, 0, 1).astype(np.float32)


def homography_clip(base, homographies, size):
    """Frames ``warp(base, H_k)`` cropped to ``size`` at the base's top-left.

    ``H_k`` maps frame-k pixel coordinates to base coordinates, i.e. frame k
    samples the base at ``H_k p``.
    """
    h, w = size
    frames = []
    for m in homographies:
        out, _ = warp_bilinear(base, np.asarray(m, dtype=np.float64))
        frames.append(out[:, :h, :w])
    return np.stack(frames)


def panning_clip(n_frames, height, width, velocity, rng, margin=None):
    """Clip whose content shifts by ``velocity`` (dx, dy) px per frame.

    Returns ``(frames [T, 3, H, W], shifts [T, 2])``; frame k shows the
    canvas at offset ``shifts[k]`` so a point at x in frame k sits at
    ``x - (shifts[k+1] - shifts[k])`` in frame k+1.
    """
    vx, vy = velocity
    margin = margin or int(np.ceil(max(abs(vx), abs(vy)) * n_frames)) + 4
    canvas = texture(height + 2 * margin, width + 2 * margin, rng)
    mid = n_frames // 2
    shifts = np.array([[margin + (k - mid) * vx, margin + (k - mid) * vy] for k in range(n_frames)])
    mats = [np.array([[1, 0, sx], [0, 1, sy], [0, 0, 1.0]]) for sx, sy in shifts]
    return homography_clip(canvas, mats, (height, width)), shifts


def write_synthetic_dataset(root, n_clips=4, n_frames=9, height=128, width=128, seed=0):
    """Write panning clips as ``root/clip_XX/frame_%05d.png`` plus ``root/manifest.txt``."""
    rng = np.random.default_rng(seed)
    dirs = []
    for c in range(n_clips):
        velocity = rng.uniform(-1.5, 1.5, size=2) * (c + 1) / n_clips * 2
        frames, _ = panning_clip(n_frames, height, width, velocity, rng)
        d = os.path.join(root, f"clip_{c:02d}")
        os.makedirs(d, exist_ok=True)
        for k, f in enumerate(frames):
            write_png(os.path.join(d, FRAME_PATTERN.format(k)), f)
        dirs.append(d)
    manifest = os.path.join(root, "manifest.txt")
    write_manifest(manifest, dirs)
    return manifest


def random_homography(rng, shift=2.0, rotation=0.01, scale=0.01, perspective=1e-5):
    """Small random projective map around the identity."""
    a = rng.uniform(-rotation, rotation)
    s = 1 + rng.uniform(-scale, scale)
    m = np.array([[s * np.cos(a), -s * np.sin(a), rng.uniform(-shift, shift)],
                  [s * np.sin(a), s * np.cos(a), rng.uniform(-shift, shift)],
                  [rng.uniform(-perspective, perspective), rng.uniform(-perspective, perspective), 1.0]])
    return m


def homography_sequence(n_frames, height, width, rng, **jitter):
    """Frames related by random consecutive homographies.

    Returns ``(frames, to_base)`` where ``to_base[k]`` maps frame-k pixel
    coordinates into the shared canvas. The true map from frame i to frame
    j is ``inv(to_base[j]) @ to_base[i]``.
    """
    margin = max(16, int(4 * jitter.get("shift", 2.0) * n_frames))
    canvas = texture(height + 2 * margin, width + 2 * margin, rng)
    centre = np.array([[1, 0, margin], [0, 1, margin], [0, 0, 1.0]])
    to_base = [None] * n_frames
    mid = n_frames // 2
    to_base[mid] = centre
    for k in range(mid + 1, n_frames):
        to_base[k] = to_base[k - 1] @ random_homography(rng, **jitter)
    for k in range(mid - 1, -1, -1):
        to_base[k] = to_base[k + 1] @ random_homography(rng, **jitter)
    return homography_clip(canvas, to_base, (height, width)), to_base
