"""Bicubic upsampling and depth-to-space, on torch tensors.

Bicubic uses the Keys kernel with a = -0.5, half-pixel centre alignment and
replicate padding. It is applied as two dense interpolation matrices so the
result is exact, differentiable and independent of backend resize quirks.
"""
from __future__ import annotations

import functools

import numpy as np
import torch

from ..errors import InvalidInputError


def cubic_kernel(x, a=-0.5):
    x = np.abs(np.asarray(x, dtype=np.float64))
    out = np.zeros_like(x)
    near = x <= 1
    far = (x > 1) & (x < 2)
    out[near] = (a + 2) * x[near] ** 3 - (a + 3) * x[near] ** 2 + 1
    out[far] = a * x[far] ** 3 - 5 * a * x[far] ** 2 + 8 * a * x[far] - 4 * a
    return out


def interpolation_matrix(n_in, scale, a=-0.5):
    """(n_in*scale, n_in) float64 matrix mapping a 1-D signal to its upsampling."""
    n_out = n_in * scale
    mat = np.zeros((n_out, n_in))
    centres = (np.arange(n_out) + 0.5) / scale - 0.5
    base = np.floor(centres).astype(int)
    for tap in range(-1, 3):
        idx = base + tap
        w = cubic_kernel(centres - idx, a)
        np.add.at(mat, (np.arange(n_out), np.clip(idx, 0, n_in - 1)), w)
    mat /= mat.sum(axis=1, keepdims=True)
    return mat


@functools.lru_cache(maxsize=64)
def _torch_matrix(n_in, scale):
    return torch.from_numpy(interpolation_matrix(n_in, scale).copy())


def bicubic_upsample(x, scale):
    """Upsample ``[..., H, W]`` by an integer factor."""
    if int(scale) != scale or scale < 2:
        raise InvalidInputError(f"scale must be an integer >= 2, got {scale}")
    scale = int(scale)
    is_numpy = isinstance(x, np.ndarray)
    t = torch.from_numpy(x) if is_numpy else x
    h, w = t.shape[-2:]
    wy = _torch_matrix(h, scale).to(t.device, t.dtype)
    wx = _torch_matrix(w, scale).to(t.device, t.dtype)
    out = wy @ t @ wx.T
    return out.numpy() if is_numpy else out


def depth_to_space(x, scale):
    """``[..., C*r*r, H, W] -> [..., C, H*r, W*r]``; channel c*r*r + dy*r + dx lands at (dy, dx)."""
    c = x.shape[-3]
    if c % (scale * scale):
        raise InvalidInputError(f"{c} channels not divisible by scale^2 = {scale * scale}")
    lead = x.shape[:-3]
    h, w = x.shape[-2:]
    out_c = c // (scale * scale)
    x = x.reshape(*lead, out_c, scale, scale, h, w)
    nd = len(lead)
    perm = list(range(nd)) + [nd, nd + 3, nd + 1, nd + 4, nd + 2]
    x = x.permute(*perm) if isinstance(x, torch.Tensor) else x.transpose(perm)
    return x.reshape(*lead, out_c, h * scale, w * scale)
