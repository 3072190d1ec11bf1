from .degrade import blur, degrade_hr_to_lr, gaussian_kernel1d
from .io import (ClipRecord, list_frames, load_sequence, read_manifest, read_png, reflect_index,
                 window_indices, write_manifest, write_png)
from .samples import augment, make_training_sample

__all__ = [
    "blur", "degrade_hr_to_lr", "gaussian_kernel1d", "ClipRecord", "list_frames",
    "load_sequence", "read_manifest", "read_png", "reflect_index", "window_indices",
    "write_manifest", "write_png", "augment", "make_training_sample",
]
