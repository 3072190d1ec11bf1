"""Random training windows with shared crops and augmentation."""
from __future__ import annotations

import numpy as np

from ..config import DegradationSpec
from ..frames import FrameSequence
from .degrade import degrade_hr_to_lr


def augment(frames, hflip=False, vflip=False, rot90=0):
    """Apply the same flips / quarter turns to ``[..., H, W]`` frames."""
    if hflip:
        frames = frames[..., ::-1]
    if vflip:
        frames = frames[..., ::-1, :]
    if rot90:
        frames = np.rot90(frames, rot90, axes=(-2, -1))
    return np.ascontiguousarray(frames)


def draw_augmentation(rng, flip_p=0.5, rot_p=0.5):
    hflip = bool(rng.random() < flip_p)
    vflip = bool(rng.random() < flip_p)
    rot = int(rng.integers(1, 4)) if rng.random() < rot_p else 0
    return {"hflip": hflip, "vflip": vflip, "rot90": rot}


def make_training_sample(clip, seed, spec: DegradationSpec = DegradationSpec(), num_frames=7,
                         crop=256, flip_p=0.5, rot_p=0.5):
    """Return ``(lr FrameSequence, hr reference [3, crop, crop])`` or None if the clip is too short.

    ``clip`` is a ``[T, 3, H, W]`` array or anything with ``.load()``. The
    same crop and augmentation are applied to every frame of the window.
    """
    video = clip.load() if hasattr(clip, "load") else np.asarray(clip)
    t, _, h, w = video.shape
    if t < num_frames or h < crop or w < crop:
        return None
    rng = np.random.default_rng(seed)
    t0 = int(rng.integers(0, t - num_frames + 1))
    y0 = int(rng.integers(0, h - crop + 1))
    x0 = int(rng.integers(0, w - crop + 1))
    hr = video[t0:t0 + num_frames, :, y0:y0 + crop, x0:x0 + crop]
    hr = augment(hr, **draw_augmentation(rng, flip_p, rot_p))
    lr = degrade_hr_to_lr(hr, spec)
    return FrameSequence(lr, tuple(range(t0, t0 + num_frames))), \
        np.ascontiguousarray(hr[num_frames // 2], dtype=np.float32)
