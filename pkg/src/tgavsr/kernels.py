"""Hot loops of the alignment path, in two interchangeable flavours.

``*_nb`` functions are written as explicit loops and compiled by numba;
``*_np`` functions are vectorised numpy. The public names dispatch on
:data:`tgavsr._jit.USE_NUMBA` unless a ``backend`` is passed explicitly.
Both flavours return identical results up to float rounding.
"""
from __future__ import annotations

import numpy as np

from . import _jit
from ._jit import njit

POPCOUNT = np.array([bin(i).count("1") for i in range(256)], dtype=np.int32)


def _use_numba(backend):
    if backend is None:
        return _jit.USE_NUMBA
    if backend not in ("numba", "numpy"):
        raise ValueError(f"backend must be 'numba' or 'numpy', got {backend!r}")
    return backend == "numba"


# -- projective warp -----------------------------------------------------------

@njit
def warp_bilinear_nb(src, hinv):
    c, h, w = src.shape
    out = np.empty((c, h, w), dtype=src.dtype)
    mask = np.zeros((h, w), dtype=np.uint8)
    eps = 1e-6
    for y in range(h):
        for x in range(w):
            px = hinv[0, 0] * x + hinv[0, 1] * y + hinv[0, 2]
            py = hinv[1, 0] * x + hinv[1, 1] * y + hinv[1, 2]
            pw = hinv[2, 0] * x + hinv[2, 1] * y + hinv[2, 2]
            if pw > 0:
                sx = px / pw
                sy = py / pw
            else:
                sx = -1e9
                sy = -1e9
            if -eps <= sx <= w - 1 + eps and -eps <= sy <= h - 1 + eps:
                mask[y, x] = 1
            sx = min(max(sx, 0.0), w - 1.0)
            sy = min(max(sy, 0.0), h - 1.0)
            x0 = int(np.floor(sx))
            y0 = int(np.floor(sy))
            x1 = min(x0 + 1, w - 1)
            y1 = min(y0 + 1, h - 1)
            fx = sx - x0
            fy = sy - y0
            for k in range(c):
                top = (1.0 - fx) * src[k, y0, x0] + fx * src[k, y0, x1]
                bot = (1.0 - fx) * src[k, y1, x0] + fx * src[k, y1, x1]
                out[k, y, x] = (1.0 - fy) * top + fy * bot
    return out, mask


def warp_bilinear_np(src, hinv):
    c, h, w = src.shape
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    px = hinv[0, 0] * xs + hinv[0, 1] * ys + hinv[0, 2]
    py = hinv[1, 0] * xs + hinv[1, 1] * ys + hinv[1, 2]
    pw = hinv[2, 0] * xs + hinv[2, 1] * ys + hinv[2, 2]
    good = pw > 0
    safe = np.where(good, pw, 1.0)
    sx = np.where(good, px / safe, -1e9)
    sy = np.where(good, py / safe, -1e9)
    eps = 1e-6
    mask = ((sx >= -eps) & (sx <= w - 1 + eps) & (sy >= -eps) & (sy <= h - 1 + eps)).astype(np.uint8)
    sx = np.clip(sx, 0.0, w - 1.0)
    sy = np.clip(sy, 0.0, h - 1.0)
    x0 = np.floor(sx).astype(np.intp)
    y0 = np.floor(sy).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = sx - x0
    fy = sy - y0
    top = (1.0 - fx) * src[:, y0, x0] + fx * src[:, y0, x1]
    bot = (1.0 - fx) * src[:, y1, x0] + fx * src[:, y1, x1]
    return ((1.0 - fy) * top + fy * bot).astype(src.dtype), mask


def warp_bilinear(src, hinv, backend=None):
    """Backward-warp ``src`` [C, H, W]: ``out(p) = src(hinv @ p)``.

    Samples outside the source are edge-replicated and flagged 0 in the mask.
    """
    src = np.ascontiguousarray(src)
    hinv = np.ascontiguousarray(hinv, dtype=np.float64)
    fn = warp_bilinear_nb if _use_numba(backend) else warp_bilinear_np
    return fn(src, hinv)


# -- binary descriptor distances -------------------------------------------------

@njit
def hamming_matrix_nb(a, b, table):
    n, m, k = a.shape[0], b.shape[0], a.shape[1]
    out = np.empty((n, m), dtype=np.int32)
    for i in range(n):
        for j in range(m):
            d = 0
            for t in range(k):
                d += table[a[i, t] ^ b[j, t]]
            out[i, j] = d
    return out


def hamming_matrix_np(a, b, table):
    return table[a[:, None, :] ^ b[None, :, :]].sum(axis=2, dtype=np.int32)


def hamming_matrix(a, b, backend=None):
    """All pairwise Hamming distances between packed uint8 descriptors."""
    a = np.ascontiguousarray(a, dtype=np.uint8)
    b = np.ascontiguousarray(b, dtype=np.uint8)
    if len(a) == 0 or len(b) == 0:
        return np.zeros((len(a), len(b)), dtype=np.int32)
    fn = hamming_matrix_nb if _use_numba(backend) else hamming_matrix_np
    return fn(a, b, POPCOUNT)


@njit
def sq_distance_matrix_nb(a, b):
    n, m, k = a.shape[0], b.shape[0], a.shape[1]
    out = np.empty((n, m), dtype=np.float64)
    for i in range(n):
        for j in range(m):
            d = 0.0
            for t in range(k):
                diff = np.float64(a[i, t]) - np.float64(b[j, t])
                d += diff * diff
            out[i, j] = d
    return out


def sq_distance_matrix_np(a, b):
    a = a.astype(np.float64)
    b = b.astype(np.float64)
    d = (a * a).sum(1)[:, None] + (b * b).sum(1)[None, :] - 2.0 * a @ b.T
    return np.maximum(d, 0.0)


def sq_distance_matrix(a, b, backend=None):
    """All pairwise squared Euclidean distances between float descriptors."""
    a = np.ascontiguousarray(a, dtype=np.float32)
    b = np.ascontiguousarray(b, dtype=np.float32)
    if len(a) == 0 or len(b) == 0:
        return np.zeros((len(a), len(b)))
    fn = sq_distance_matrix_nb if _use_numba(backend) else sq_distance_matrix_np
    return fn(a, b)


# -- minimal-sample homography scoring -----------------------------------------

@njit
def _minimal_homography_nb(src, dst):
    # 4-point DLT in coordinates normalised by the sample's own centroid/scale
    a = np.zeros((8, 9))
    cs = np.zeros(2)
    cd = np.zeros(2)
    for i in range(4):
        cs += src[i]
        cd += dst[i]
    cs /= 4
    cd /= 4
    ss = 0.0
    sd = 0.0
    for i in range(4):
        ss += np.sqrt((src[i, 0] - cs[0]) ** 2 + (src[i, 1] - cs[1]) ** 2)
        sd += np.sqrt((dst[i, 0] - cd[0]) ** 2 + (dst[i, 1] - cd[1]) ** 2)
    if ss < 1e-12 or sd < 1e-12:
        return np.zeros((3, 3)), False
    ss = np.sqrt(2.0) * 4 / ss
    sd = np.sqrt(2.0) * 4 / sd
    for i in range(4):
        x = (src[i, 0] - cs[0]) * ss
        y = (src[i, 1] - cs[1]) * ss
        u = (dst[i, 0] - cd[0]) * sd
        v = (dst[i, 1] - cd[1]) * sd
        a[2 * i, 0] = -x
        a[2 * i, 1] = -y
        a[2 * i, 2] = -1.0
        a[2 * i, 6] = u * x
        a[2 * i, 7] = u * y
        a[2 * i, 8] = u
        a[2 * i + 1, 3] = -x
        a[2 * i + 1, 4] = -y
        a[2 * i + 1, 5] = -1.0
        a[2 * i + 1, 6] = v * x
        a[2 * i + 1, 7] = v * y
        a[2 * i + 1, 8] = v
    _, sv, vt = np.linalg.svd(a)
    if sv[7] < 1e-10 * sv[0]:
        return np.zeros((3, 3)), False
    hn = np.ascontiguousarray(vt[8]).reshape(3, 3)
    tsrc = np.array([[ss, 0.0, -ss * cs[0]], [0.0, ss, -ss * cs[1]], [0.0, 0.0, 1.0]])
    tdst_inv = np.array([[1.0 / sd, 0.0, cd[0]], [0.0, 1.0 / sd, cd[1]], [0.0, 0.0, 1.0]])
    hm = tdst_inv @ hn @ tsrc
    if abs(hm[2, 2]) < 1e-12:
        return hm, False
    return hm / hm[2, 2], True


@njit
def ransac_counts_nb(src, dst, samples, thresh):
    """Inlier count of the homography fitted to each 4-point sample (-1: degenerate)."""
    iters = samples.shape[0]
    n = src.shape[0]
    counts = np.full(iters, -1, dtype=np.int64)
    t2 = thresh * thresh
    for it in range(iters):
        hm, ok = _minimal_homography_nb(src[samples[it]], dst[samples[it]])
        if not ok:
            continue
        c = 0
        for i in range(n):
            x = src[i, 0]
            y = src[i, 1]
            pw = hm[2, 0] * x + hm[2, 1] * y + hm[2, 2]
            if abs(pw) < 1e-12:
                continue
            u = (hm[0, 0] * x + hm[0, 1] * y + hm[0, 2]) / pw - dst[i, 0]
            v = (hm[1, 0] * x + hm[1, 1] * y + hm[1, 2]) / pw - dst[i, 1]
            if u * u + v * v <= t2:
                c += 1
        counts[it] = c
    return counts


def _normalisers(pts):
    centre = pts.mean(axis=1, keepdims=True)
    spread = np.sqrt(((pts - centre) ** 2).sum(-1)).mean(axis=1)
    return centre[:, 0], spread


def ransac_counts_np(src, dst, samples, thresh):
    s = src[samples]            # [iters, 4, 2]
    d = dst[samples]
    cs, ms = _normalisers(s)
    cd, md = _normalisers(d)
    bad = (ms < 1e-12) | (md < 1e-12)
    ss = np.sqrt(2.0) / np.where(bad, 1.0, ms)
    sd = np.sqrt(2.0) / np.where(bad, 1.0, md)
    xs = (s - cs[:, None]) * ss[:, None, None]
    xd = (d - cd[:, None]) * sd[:, None, None]
    iters = len(samples)
    a = np.zeros((iters, 8, 9))
    x, y = xs[..., 0], xs[..., 1]
    u, v = xd[..., 0], xd[..., 1]
    a[:, 0::2, 0], a[:, 0::2, 1], a[:, 0::2, 2] = -x, -y, -1.0
    a[:, 0::2, 6], a[:, 0::2, 7], a[:, 0::2, 8] = u * x, u * y, u
    a[:, 1::2, 3], a[:, 1::2, 4], a[:, 1::2, 5] = -x, -y, -1.0
    a[:, 1::2, 6], a[:, 1::2, 7], a[:, 1::2, 8] = v * x, v * y, v
    _, sv, vt = np.linalg.svd(a)
    bad |= sv[:, 7] < 1e-10 * sv[:, 0]
    hn = vt[:, 8].reshape(iters, 3, 3)
    tsrc = np.zeros((iters, 3, 3))
    tsrc[:, 0, 0] = tsrc[:, 1, 1] = ss
    tsrc[:, 0, 2] = -ss * cs[:, 0]
    tsrc[:, 1, 2] = -ss * cs[:, 1]
    tsrc[:, 2, 2] = 1.0
    tdi = np.zeros((iters, 3, 3))
    tdi[:, 0, 0] = tdi[:, 1, 1] = 1.0 / sd
    tdi[:, 0, 2] = cd[:, 0]
    tdi[:, 1, 2] = cd[:, 1]
    tdi[:, 2, 2] = 1.0
    hm = tdi @ hn @ tsrc
    h22 = hm[:, 2, 2]
    bad |= np.abs(h22) < 1e-12
    hm = hm / np.where(bad, 1.0, h22)[:, None, None]
    homog = np.concatenate([src, np.ones((len(src), 1))], axis=1)
    proj = np.einsum("kij,nj->kni", hm, homog)
    pw = proj[..., 2]
    ok = np.abs(pw) >= 1e-12
    pw = np.where(ok, pw, 1.0)
    err = (proj[..., 0] / pw - dst[:, 0]) ** 2 + (proj[..., 1] / pw - dst[:, 1]) ** 2
    counts = ((err <= thresh * thresh) & ok).sum(axis=1).astype(np.int64)
    counts[bad] = -1
    return counts


def ransac_counts(src, dst, samples, thresh, backend=None):
    src = np.ascontiguousarray(src, dtype=np.float64)
    dst = np.ascontiguousarray(dst, dtype=np.float64)
    samples = np.ascontiguousarray(samples, dtype=np.int64)
    fn = ransac_counts_nb if _use_numba(backend) else ransac_counts_np
    return fn(src, dst, samples, float(thresh))
