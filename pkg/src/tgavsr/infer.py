"""Sliding-window super-resolution of whole videos."""
from __future__ import annotations

import numpy as np
import torch

from .align import PairwiseCache, VideoAligner
from .config import AlignConfig
from .data.io import window_indices


def windows(video, num_frames, align: AlignConfig | None = None, cache: PairwiseCache | None = None):
    """Yield ``(t, window [T, 3, h, w])`` for every frame, reflect-padded at the ends."""
    video = np.asarray(video, dtype=np.float32)
    aligner = VideoAligner(video, align, cache) if align is not None and align.enabled else None
    for t in range(len(video)):
        idx = window_indices(t, num_frames, len(video))
        if aligner is not None:
            yield t, aligner.window(idx).frames.frames
        else:
            yield t, video[idx]


@torch.no_grad()
def super_resolve(model, video, align: AlignConfig | None = None, batch_size=4, callback=None,
                  cache: PairwiseCache | None = None):
    """SR every frame of ``video`` [T, 3, h, w] -> [T, 3, r h, r w] float32.

    ``callback(t, window, output)`` is called per frame if given. Passing a
    ``cache`` lets callers inspect or persist the pairwise estimates.
    """
    model.eval()
    out = []
    pending = []

    def flush():
        x = torch.from_numpy(np.stack([w for _, w in pending]))
        y = model(x).numpy()
        for (t, w), o in zip(pending, y):
            if callback is not None:
                callback(t, w, o)
            out.append(o)
        pending.clear()

    for t, win in windows(video, model.cfg.num_frames, align, cache):
        pending.append((t, win))
        if len(pending) == batch_size:
            flush()
    if pending:
        flush()
    return np.stack(out)
