"""Aligning a window of frames to its reference frame."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..config import AlignConfig
from ..errors import DegenerateChainError, InvalidInputError
from ..frames import FrameSequence
from .homography import Homography, PairwiseCache, compose_chain
from .warp import roundtrip_error, warp_frame

ALIGNED = "aligned"
KEPT = "kept-original"


@dataclass
class AlignmentResult:
    frames: FrameSequence
    masks: np.ndarray                 # [T, H, W] bool
    status: list
    homographies: list = field(default_factory=list)   # neighbour -> reference, None for ref

    @property
    def n_aligned(self):
        return sum(s == ALIGNED for s in self.status)


def align_sequence(seq, cfg: AlignConfig | None = None, cache: PairwiseCache | None = None):
    """Warp every neighbour onto the reference using chained consecutive homographies.

    Only consecutive pairs are estimated (through ``cache``, so a sliding
    window over a video estimates each pair once). A neighbour stays
    unaligned when any link of its chain is unreliable, the chain is
    degenerate, or the H / H^-1 round trip drifts more than
    ``cfg.roundtrip_threshold``.
    """
    if not isinstance(seq, FrameSequence):
        seq = FrameSequence(np.asarray(seq))
    cfg = cfg or (cache.cfg if cache is not None else AlignConfig())
    cache = cache if cache is not None else PairwiseCache(cfg)
    frames, idx = seq.frames, list(seq.indices)
    t, ref = len(seq), seq.reference_index
    if t % 2 == 0:
        raise InvalidInputError("sequence length must be odd")
    links = {}
    for k in range(t - 1):
        h = cache.link(frames[k], frames[k + 1], idx[k], idx[k + 1])
        links[(k, k + 1)] = Homography(h.matrix, h.inlier_count, k, k + 1, h.reliable)

    out = frames.copy()
    masks = np.ones((t,) + frames.shape[2:], dtype=bool)
    status = [KEPT] * t
    homs = [None] * t
    for i in range(t):
        if i == ref:
            continue
        try:
            h = compose_chain(links, i, ref)
        except DegenerateChainError:
            continue
        homs[i] = h
        if not h.reliable:
            continue
        if roundtrip_error(frames[i], h) > cfg.roundtrip_threshold:
            continue
        warped, mask = warp_frame(frames[i], h)
        out[i] = warped.astype(frames.dtype, copy=False)
        masks[i] = mask
        status[i] = ALIGNED
    return AlignmentResult(FrameSequence(out, tuple(idx)), masks, status, homs)


class VideoAligner:
    """Sliding-window alignment over one video with a shared pair cache."""

    def __init__(self, video, cfg: AlignConfig | None = None, cache: PairwiseCache | None = None):
        self.video = video            # indexable of [3, H, W] frames
        self.cache = cache or PairwiseCache(cfg or AlignConfig())

    @property
    def estimations(self):
        return self.cache.estimations

    def window(self, indices):
        seq = FrameSequence(np.stack([np.asarray(self.video[i]) for i in indices]), tuple(indices))
        return align_sequence(seq, self.cache.cfg, self.cache)
