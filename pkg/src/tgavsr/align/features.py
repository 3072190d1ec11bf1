"""Oriented-corner keypoints and ratio-test matching."""
from __future__ import annotations

import cv2
import numpy as np

from ..kernels import hamming_matrix, sq_distance_matrix


def to_gray_u8(frame):
    """[3, H, W] float in [0, 1] -> [H, W] uint8 luma."""
    frame = np.asarray(frame, dtype=np.float64)
    gray = 0.299 * frame[0] + 0.587 * frame[1] + 0.114 * frame[2]
    return np.clip(np.rint(gray * 255.0), 0, 255).astype(np.uint8)


SMALL_SIDE = 256   # frames below this are upsampled 2x before detection


def detect(gray, n_features=1000, detector="orb"):
    """Keypoints and descriptors; returns (xy [K, 2] float64, descriptors).

    Small frames (LR video is often 64x64) are upsampled 2x first so the
    detector finds enough corners away from the border; coordinates are
    mapped back to the original pixel grid.
    """
    h, w = gray.shape
    up = 2 if min(h, w) < SMALL_SIDE else 1
    img = cv2.resize(gray, (w * up, h * up), interpolation=cv2.INTER_CUBIC) if up > 1 else gray
    if detector == "orb":
        patch = 21 if min(img.shape) < 2 * SMALL_SIDE else 31
        finder = cv2.ORB_create(nfeatures=n_features, scaleFactor=1.2, nlevels=3,
                                edgeThreshold=patch, patchSize=patch, fastThreshold=5)
        width, dtype = 32, np.uint8
    elif detector == "sift":
        finder = cv2.SIFT_create(nfeatures=n_features, contrastThreshold=0.01)
        width, dtype = 128, np.float32
    else:
        raise ValueError(f"unknown detector {detector!r}")
    kps, desc = finder.detectAndCompute(img, None)
    if desc is None or not kps:
        return np.zeros((0, 2)), np.zeros((0, width), dtype=dtype)
    xy = np.array([kp.pt for kp in kps], dtype=np.float64)
    return (xy + 0.5) / up - 0.5, desc


def ratio_match(desc_a, desc_b, ratio=0.75):
    """Indices (i, j) of matches whose best distance beats ``ratio`` x second best.

    uint8 descriptors are compared by Hamming distance, float ones by
    Euclidean distance.
    """
    if len(desc_a) == 0 or len(desc_b) < 2:
        return np.zeros((0, 2), dtype=np.intp)
    if desc_a.dtype == np.uint8:
        dist = hamming_matrix(desc_a, desc_b)
    else:
        dist = np.sqrt(sq_distance_matrix(desc_a, desc_b))
    order = np.argpartition(dist, 1, axis=1)[:, :2]
    rows = np.arange(len(dist))
    d0 = dist[rows, order[:, 0]]
    d1 = dist[rows, order[:, 1]]
    best = np.where(d0 <= d1, order[:, 0], order[:, 1])
    first, second = np.minimum(d0, d1), np.maximum(d0, d1)
    keep = first < ratio * second
    return np.stack([rows[keep], best[keep]], axis=1)
