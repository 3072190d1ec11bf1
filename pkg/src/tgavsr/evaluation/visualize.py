"""Temporal profiles and attention-mask export."""
from __future__ import annotations

import os

import numpy as np
import torch

from ..data.io import write_png
from ..errors import InvalidInputError


def temporal_profile(frames, row):
    """Stack row ``row`` of every frame: ``[T, W]`` (or ``[C, T, W]`` for colour)."""
    frames = [np.asarray(f) for f in frames]
    if not frames:
        raise InvalidInputError("temporal_profile needs at least one frame")
    h = frames[0].shape[-2]
    if not 0 <= row < h:
        raise InvalidInputError(f"row {row} outside 0..{h - 1}")
    return np.stack([f[..., row, :] for f in frames], axis=-2)


def occlude(seq, frame_indices, box, value=0.0):
    """Copy of ``seq`` ([T, 3, H, W]) with ``box`` = (y0, y1, x0, x1) blanked in chosen frames."""
    out = np.array(seq, copy=True)
    y0, y1, x0, x1 = box
    for i in frame_indices:
        out[i, :, y0:y1, x0:x1] = value
    return out


@torch.no_grad()
def attention_masks(model, seq):
    """Masks [N, H, W] for one LR window [T, 3, H, W]."""
    model.eval()
    x = torch.as_tensor(np.asarray(seq, dtype=np.float32))[None]
    _, masks = model(x, return_attention=True)
    return masks[0].numpy()


def export_attention(model, seq, out_dir, occlude_groups=(), box=None, prefix="mask"):
    """Write one 8-bit grayscale image per group mask plus a side-by-side montage.

    With ``occlude_groups`` and ``box`` the neighbour frames of those groups
    (0-based group numbers) are blanked inside ``box`` before inference.
    Returns the masks array.
    """
    seq = np.asarray(seq, dtype=np.float32)
    if occlude_groups and box is not None:
        ref = model.plan.reference
        frames = {i for g in occlude_groups for i in model.plan.groups[g] if i != ref}
        seq = occlude(seq, sorted(frames), box)
    masks = attention_masks(model, seq)
    os.makedirs(out_dir, exist_ok=True)
    for n, m in enumerate(masks):
        write_png(os.path.join(out_dir, f"{prefix}_{n + 1}.png"), m)
    gap = np.ones((masks.shape[1], 2))
    montage = np.concatenate([x for m in masks for x in (m, gap)][:-1], axis=1)
    write_png(os.path.join(out_dir, f"{prefix}_montage.png"), montage)
    return masks
