"""Pairwise homography estimation, chain composition and the sidecar file."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..config import AlignConfig
from ..errors import DataError, DegenerateChainError, InvalidInputError
from ..kernels import ransac_counts
from .features import detect, ratio_match, to_gray_u8

DET_EPS = 1e-8


@dataclass
class Homography:
    """3x3 projective map from ``source_index`` pixel coords to ``target_index`` coords.

    Points are column vectors ``(x, y, 1)`` with x the column. ``reliable`` is
    False when estimation gave too few inliers; the matrix is then identity.
    """

    matrix: np.ndarray
    inlier_count: int = 0
    source_index: int = 0
    target_index: int = 1
    reliable: bool = True

    def __post_init__(self):
        self.matrix = normalize(self.matrix)

    @property
    def inverse(self):
        return Homography(invert(self.matrix), self.inlier_count, self.target_index,
                          self.source_index, self.reliable)

    def apply(self, pts):
        return apply_homography(self.matrix, pts)


def normalize(m):
    m = np.asarray(m, dtype=np.float64).reshape(3, 3)
    if abs(m[2, 2]) < 1e-12:
        raise DegenerateChainError("homography has h33 = 0 and cannot be normalised")
    return m / m[2, 2]


def invert(m):
    m = normalize(m)
    if abs(np.linalg.det(m)) <= DET_EPS:
        raise DegenerateChainError(f"homography is not invertible (det={np.linalg.det(m):.3g})")
    return normalize(np.linalg.inv(m))


def translation(dx, dy):
    return np.array([[1.0, 0.0, dx], [0.0, 1.0, dy], [0.0, 0.0, 1.0]])


def apply_homography(m, pts):
    pts = np.asarray(pts, dtype=np.float64)
    p = pts @ m[:, :2].T + m[:, 2]
    return p[:, :2] / p[:, 2:3]


def corner_error(m_est, m_true, width, height):
    """Mean distance between the image corners mapped by two homographies."""
    corners = np.array([[0, 0], [width - 1, 0], [0, height - 1], [width - 1, height - 1]], float)
    return float(np.linalg.norm(apply_homography(m_est, corners)
                                - apply_homography(m_true, corners), axis=1).mean())


def fit_dlt(src, dst):
    """Least-squares homography from >= 4 correspondences (Hartley-normalised DLT)."""
    src = np.asarray(src, dtype=np.float64)
    dst = np.asarray(dst, dtype=np.float64)
    if len(src) < 4:
        raise InvalidInputError("need at least 4 correspondences")

    def conditioner(p):
        c = p.mean(axis=0)
        s = np.sqrt(((p - c) ** 2).sum(1)).mean()
        s = math.sqrt(2) / s if s > 1e-12 else 1.0
        return np.array([[s, 0, -s * c[0]], [0, s, -s * c[1]], [0, 0, 1.0]])

    ts, td = conditioner(src), conditioner(dst)
    xs = apply_homography(ts, src)
    xd = apply_homography(td, dst)
    n = len(src)
    a = np.zeros((2 * n, 9))
    x, y, u, v = xs[:, 0], xs[:, 1], xd[:, 0], xd[:, 1]
    a[0::2, 0:3] = np.stack([-x, -y, -np.ones(n)], 1)
    a[0::2, 6:9] = np.stack([u * x, u * y, u], 1)
    a[1::2, 3:6] = np.stack([-x, -y, -np.ones(n)], 1)
    a[1::2, 6:9] = np.stack([v * x, v * y, v], 1)
    _, _, vt = np.linalg.svd(a)
    m = np.linalg.inv(td) @ vt[-1].reshape(3, 3) @ ts
    return normalize(m)


def _reproj_sq(m, src, dst):
    p = src @ m[:, :2].T + m[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        q = p[:, :2] / p[:, 2:3]
    err = ((q - dst) ** 2).sum(1)
    return np.where(np.isfinite(err), err, np.inf)


def ransac_homography(src, dst, cfg: AlignConfig = AlignConfig()):
    """Robust fit; returns (matrix or None, inlier mask)."""
    n = len(src)
    if n < 4:
        return None, np.zeros(n, dtype=bool)
    rng = np.random.default_rng(cfg.seed)
    samples = np.argsort(rng.random((cfg.ransac_iters, n)), axis=1)[:, :4]
    counts = ransac_counts(src, dst, samples, cfg.ransac_threshold)
    best_it, best = -1, 0
    for it, c in enumerate(counts):
        if c > best:
            best_it, best = it, int(c)
        if best >= n:
            break
        if best > 0:
            # adaptive stop once the confidence target is met
            needed = math.log(1 - cfg.confidence) / math.log1p(-(best / n) ** 4)
            if it + 1 >= needed:
                break
    if best_it < 0 or best < 4:
        return None, np.zeros(n, dtype=bool)
    idx = samples[best_it]
    m = fit_dlt(src[idx], dst[idx])
    t2 = cfg.ransac_threshold ** 2
    inliers = _reproj_sq(m, src, dst) <= t2
    for _ in range(5):
        if inliers.sum() < 4:
            break
        m_new = fit_dlt(src[inliers], dst[inliers])
        new = _reproj_sq(m_new, src, dst) <= t2
        m = m_new
        if np.array_equal(new, inliers):
            break
        inliers = new
    return m, inliers


def estimate_pairwise_homography(frame_a, frame_b, cfg: AlignConfig = AlignConfig(),
                                 source_index=0, target_index=1):
    """Homography taking ``frame_a`` pixel coordinates to ``frame_b`` coordinates.

    Never raises for weak texture: too few inliers yields an identity
    homography with ``reliable=False``.
    """
    frame_a, frame_b = np.asarray(frame_a), np.asarray(frame_b)
    if frame_a.shape != frame_b.shape:
        raise InvalidInputError(f"frame shapes differ: {frame_a.shape} vs {frame_b.shape}")
    pa, da = detect(to_gray_u8(frame_a), cfg.n_features, cfg.detector)
    pb, db = detect(to_gray_u8(frame_b), cfg.n_features, cfg.detector)
    matches = ratio_match(da, db, cfg.ratio)
    m, inliers = (None, np.zeros(0, bool)) if len(matches) < 4 else \
        ransac_homography(pa[matches[:, 0]], pb[matches[:, 1]], cfg)
    count = int(inliers.sum())
    if m is None or count < cfg.min_inliers or abs(np.linalg.det(m)) <= DET_EPS:
        return Homography(np.eye(3), count, source_index, target_index, reliable=False)
    return Homography(m, count, source_index, target_index)


def compose_chain(pairwise, from_index, to_index):
    """Compose consecutive homographies into ``H_{from -> to}``.

    ``pairwise`` is a list of Homography (or a mapping keyed by
    ``(k, k+1)``) holding each forward link ``k -> k+1``. With column vectors
    the forward product is ``H_{k+1->k+2} @ H_{k->k+1}``; the backward
    direction multiplies the inverted links. Accumulation is in float64.
    """
    links = pairwise if isinstance(pairwise, dict) else \
        {(h.source_index, h.target_index): h for h in pairwise}
    m = np.eye(3)
    reliable, inliers = True, None
    steps = range(from_index, to_index) if from_index <= to_index else \
        range(from_index - 1, to_index - 1, -1)
    for k in steps:
        link = links.get((k, k + 1))
        if link is None:
            back = links.get((k + 1, k))
            if back is None:
                raise InvalidInputError(f"chain {from_index}->{to_index} is missing pair ({k}, {k + 1})")
            link = back.inverse
        step = link.matrix if from_index <= to_index else invert(link.matrix)
        if abs(np.linalg.det(step)) <= DET_EPS:
            raise DegenerateChainError(f"link ({k}, {k + 1}) is not invertible")
        m = normalize(step @ m)
        reliable &= link.reliable
        inliers = link.inlier_count if inliers is None else min(inliers, link.inlier_count)
    return Homography(m, inliers or 0, from_index, to_index, reliable)


def save_sidecar(path, homographies):
    """One row per pair: source, target, 9 entries row-major, inlier count."""
    rows = [[h.source_index, h.target_index, *h.matrix.ravel(), h.inlier_count]
            for h in homographies]
    try:
        with open(path, "w") as fh:
            fh.write("# source target h00 h01 h02 h10 h11 h12 h20 h21 h22 inliers\n")
            for r in rows:
                fh.write(f"{int(r[0])} {int(r[1])} " + " ".join(repr(float(v)) for v in r[2:11])
                         + f" {int(r[11])}\n")
    except OSError as exc:
        raise DataError(f"cannot write homography sidecar {path}: {exc}") from exc


def load_sidecar(path, min_inliers=AlignConfig.min_inliers):
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)  # empty sidecar is valid
            data = np.loadtxt(path, ndmin=2, comments="#")
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read homography sidecar {path}: {exc}") from exc
    if data.size == 0:
        return []
    if data.shape[1] != 12:
        raise DataError(f"{path}: expected 12 columns, found {data.shape[1]}")
    out = []
    for row in data:
        count = int(row[11])
        out.append(Homography(row[2:11].reshape(3, 3), count, int(row[0]), int(row[1]),
                              reliable=count >= min_inliers))
    return out


@dataclass
class PairwiseCache:
    """Memoises consecutive-pair estimates so each pair of a video is estimated once."""

    cfg: AlignConfig = field(default_factory=AlignConfig)
    pairs: dict = field(default_factory=dict)
    estimations: int = 0

    def link(self, frame_a, frame_b, index_a, index_b):
        if index_a == index_b:
            return Homography(np.eye(3), 0, index_a, index_b)
        key = (min(index_a, index_b), max(index_a, index_b))
        h = self.pairs.get(key)
        if h is None:
            fa, fb = (frame_a, frame_b) if index_a < index_b else (frame_b, frame_a)
            h = estimate_pairwise_homography(fa, fb, self.cfg, *key)
            self.estimations += 1
            self.pairs[key] = h
        return h if index_a < index_b else h.inverse

    def save(self, path):
        save_sidecar(path, [self.pairs[k] for k in sorted(self.pairs)])

    def load(self, path):
        for h in load_sidecar(path, self.cfg.min_inliers):
            key = (min(h.source_index, h.target_index), max(h.source_index, h.target_index))
            self.pairs[key] = h if h.source_index < h.target_index else h.inverse
