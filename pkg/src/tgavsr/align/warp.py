"""Projective warping with validity masks."""
from __future__ import annotations

import numpy as np

from ..kernels import warp_bilinear
from .homography import Homography, invert


def warp_frame(frame, h):
    """Warp ``frame`` [C, H, W] by ``h`` (source coords -> output coords).

    Returns ``(warped, mask)``; ``mask`` is True where the output pixel's
    preimage lies inside the source, False where edge values were replicated.
    """
    m = h.matrix if isinstance(h, Homography) else np.asarray(h, dtype=np.float64)
    frame = np.asarray(frame)
    dtype = frame.dtype if frame.dtype in (np.float32, np.float64) else np.float32
    out, mask = warp_bilinear(frame.astype(dtype, copy=False), invert(m))
    return out, mask.astype(bool)


def roundtrip_error(frame, h):
    """Mean |frame - warp(warp(frame, H), H^-1)| over the jointly valid region."""
    m = h.matrix if isinstance(h, Homography) else np.asarray(h, dtype=np.float64)
    fwd, mask_fwd = warp_frame(frame, m)
    back, mask_back = warp_frame(fwd, invert(m))
    # pixels whose round trip passed through replicated borders are excluded
    fwd_valid_back, _ = warp_frame(mask_fwd[None].astype(np.float32), invert(m))
    valid = mask_back & (fwd_valid_back[0] > 1 - 1e-6)
    if not valid.any():
        return float("inf")
    return float(np.abs(back - frame)[:, valid].mean())
