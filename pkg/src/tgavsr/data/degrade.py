"""Blur-and-decimate (BD) degradation."""
from __future__ import annotations

import math

import numpy as np
from scipy import ndimage

from ..config import DegradationSpec
from ..errors import InvalidInputError


def gaussian_kernel1d(sigma, size):
    half = size // 2
    x = np.arange(-half, half + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def check_spec(spec: DegradationSpec):
    problems = spec.problems()
    min_size = math.ceil(4 * spec.sigma)
    min_size += 1 - min_size % 2
    if spec.kernel_size < min_size:
        problems.append(f"kernel_size {spec.kernel_size} < {min_size} (4 sigma, odd)")
    if problems:
        raise InvalidInputError("; ".join(problems))


def blur(img, spec: DegradationSpec = DegradationSpec()):
    """Separable normalised Gaussian over the last two axes, mirror padding."""
    k = gaussian_kernel1d(spec.sigma, spec.kernel_size)
    img = np.asarray(img, dtype=np.float64)
    out = ndimage.correlate1d(img, k, axis=-1, mode="mirror")
    return ndimage.correlate1d(out, k, axis=-2, mode="mirror")


def degrade_hr_to_lr(hr, spec: DegradationSpec = DegradationSpec()):
    """Blur, then keep every ``scale``-th pixel starting at offset 0.

    Works on ``[..., H, W]`` arrays; returns float32.
    """
    check_spec(spec)
    hr = np.asarray(hr)
    h, w = hr.shape[-2:]
    r = spec.scale
    if h % r or w % r:
        raise InvalidInputError(f"HR size {h}x{w} is not divisible by scale {r}")
    return blur(hr, spec)[..., ::r, ::r].astype(np.float32)
