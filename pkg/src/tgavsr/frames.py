"""Frame containers shared by the data, alignment and model code."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError


def check_frame(frame, name="frame"):
    frame = np.asarray(frame)
    if frame.ndim != 3 or frame.shape[0] != 3:
        raise InvalidInputError(f"{name} must be [3, H, W], got shape {frame.shape}")
    if min(frame.shape[1:]) < 8:
        raise InvalidInputError(f"{name} must be at least 8x8, got {frame.shape[1:]}")
    if not np.all(np.isfinite(frame)):
        raise InvalidInputError(f"{name} contains non-finite values")
    return frame


@dataclass
class FrameSequence:
    """An odd-length window of RGB frames in [0, 1]; the middle frame is the reference.

    ``frames`` has shape ``[2N+1, 3, H, W]``.
    """

    frames: np.ndarray
    indices: tuple = ()   # source frame numbers, informational

    def __post_init__(self):
        self.frames = np.asarray(self.frames)
        if self.frames.ndim != 4 or self.frames.shape[1] != 3:
            raise InvalidInputError(f"frames must be [T, 3, H, W], got {self.frames.shape}")
        t = self.frames.shape[0]
        if t % 2 == 0:
            raise InvalidInputError(f"sequence length must be odd, got {t}")
        if min(self.frames.shape[2:]) < 8:
            raise InvalidInputError("frames must be at least 8x8")
        if not self.indices:
            self.indices = tuple(range(t))

    def __len__(self):
        return self.frames.shape[0]

    @property
    def reference_index(self):
        return len(self) // 2

    @property
    def reference(self):
        return self.frames[self.reference_index]
