"""Frame files, clip directories and dataset manifests."""
from __future__ import annotations

import os
import re
from dataclasses import dataclass

import numpy as np
from PIL import Image

from ..errors import DataError, InvalidInputError
from ..frames import FrameSequence

FRAME_PATTERN = "frame_{:05d}.png"
_FRAME_RE = re.compile(r"^frame_(\d+)\.png$")


def read_png(path):
    """8-bit image -> float32 [3, H, W] in [0, 1]."""
    try:
        with Image.open(path) as im:
            arr = np.asarray(im.convert("RGB"), dtype=np.float32)
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read image {path}: {exc}") from exc
    return arr.transpose(2, 0, 1) / 255.0


def write_png(path, frame):
    frame = np.asarray(frame)
    if frame.ndim == 2:
        arr = frame
    else:
        arr = frame.transpose(1, 2, 0)
    arr = np.clip(np.rint(np.asarray(arr, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)
    try:
        Image.fromarray(arr).save(path)
    except OSError as exc:
        raise DataError(f"cannot write image {path}: {exc}") from exc


def list_frames(directory):
    try:
        names = os.listdir(directory)
    except OSError as exc:
        raise DataError(f"cannot list frame directory {directory}: {exc}") from exc
    numbered = sorted((int(m.group(1)), n) for n in names if (m := _FRAME_RE.match(n)))
    return [os.path.join(directory, n) for _, n in numbered]


def reflect_index(i, n):
    """Mirror ``i`` into ``[0, n)`` without repeating the edge frame."""
    if n == 1:
        return 0
    period = 2 * (n - 1)
    i = abs(i) % period
    return period - i if i >= n else i


def window_indices(center, num_frames, length):
    half = num_frames // 2
    return [reflect_index(center + k, length) for k in range(-half, half + 1)]


def load_sequence(directory, reference_index, num_frames):
    """Window of ``num_frames`` centred on ``reference_index``, reflect-padded at the ends."""
    if num_frames < 1 or num_frames % 2 == 0:
        raise InvalidInputError(f"num_frames must be odd and positive, got {num_frames}")
    paths = list_frames(directory)
    if not paths:
        raise DataError(f"no frame_*.png files in {directory}")
    if not 0 <= reference_index < len(paths):
        raise InvalidInputError(f"reference {reference_index} outside 0..{len(paths) - 1}")
    idx = window_indices(reference_index, num_frames, len(paths))
    loaded = {i: read_png(paths[i]) for i in set(idx)}
    frames = [loaded[i] for i in idx]
    return FrameSequence(np.stack(frames), tuple(idx))


@dataclass
class ClipRecord:
    path: str
    frame_count: int
    height: int
    width: int
    split: str = "train"

    @classmethod
    def scan(cls, path, split="train"):
        paths = list_frames(path)
        if not paths:
            raise DataError(f"no frame_*.png files in {path}")
        with Image.open(paths[0]) as im:
            w, h = im.size
        return cls(path, len(paths), h, w, split)

    def load(self):
        frames = [read_png(p) for p in list_frames(self.path)]
        shapes = {f.shape for f in frames}
        if len(shapes) != 1:
            raise DataError(f"{self.path}: frames differ in size {sorted(shapes)}")
        return np.stack(frames)


def read_manifest(path, split=None):
    """Clip directories listed one per line, optionally followed by a split tag."""
    base = os.path.dirname(os.path.abspath(path))
    records = []
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read manifest {path}: {exc}") from exc
    for line in lines:
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        clip_dir = parts[0] if os.path.isabs(parts[0]) else os.path.join(base, parts[0])
        tag = parts[1] if len(parts) > 1 else "train"
        if split is None or tag == split:
            records.append(ClipRecord.scan(clip_dir, tag))
    return records


def write_manifest(path, clip_dirs, split="train"):
    base = os.path.dirname(os.path.abspath(path))
    with open(path, "w") as fh:
        for d in clip_dirs:
            fh.write(f"{os.path.relpath(os.path.abspath(d), base)} {split}\n")
