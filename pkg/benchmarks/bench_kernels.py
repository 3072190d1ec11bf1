"""Compare the numba and numpy flavours of the alignment kernels.

    python benchmarks/bench_kernels.py [--repeat 5] [--size 128]

Prints the best-of-N wall time per kernel for each backend, plus one full
7-frame ``align_sequence`` call (which also includes ORB detection, so the
gap there is smaller). The first numba call compiles; it is excluded.
"""
import argparse
import timeit

import numpy as np

from tgavsr import _jit, kernels
from tgavsr.align import align_sequence
from tgavsr.data.synthetic import homography_sequence, texture
from tgavsr.frames import FrameSequence


def cases(size, rng):
    img = texture(size, size, rng)
    hinv = np.array([[1.01, 0.02, -3.3], [-0.01, 0.99, 2.2], [1e-4, -2e-4, 1.0]])
    desc_a = rng.integers(0, 256, (1000, 32), dtype=np.uint8)
    desc_b = rng.integers(0, 256, (1000, 32), dtype=np.uint8)
    src = rng.random((400, 2)) * size
    dst = src + rng.normal(0, 0.5, src.shape)
    samples = np.stack([rng.choice(len(src), 4, replace=False) for _ in range(2000)])
    frames, _ = homography_sequence(7, size, size, rng)
    seq = FrameSequence(frames)
    return {
        "warp_bilinear": lambda: kernels.warp_bilinear(img, hinv),
        "hamming_matrix 1000x1000": lambda: kernels.hamming_matrix(desc_a, desc_b),
        "ransac_counts 2000 samples": lambda: kernels.ransac_counts(src, dst, samples, 3.0),
        "align_sequence 7 frames": lambda: align_sequence(seq),
    }


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--size", type=int, default=128)
    args = p.parse_args()
    rng = np.random.default_rng(0)
    work = cases(args.size, rng)
    results = {}
    for backend in ("numba", "numpy"):
        _jit.USE_NUMBA = backend == "numba"
        for name, fn in work.items():
            fn()  # warm-up / JIT compile
            results[(name, backend)] = min(timeit.repeat(fn, number=1, repeat=args.repeat))
    print(f"{'kernel':<28} {'numba ms':>10} {'numpy ms':>10} {'speed-up':>9}")
    for name in work:
        nb, npy = results[(name, "numba")], results[(name, "numpy")]
        print(f"{name:<28} {nb * 1e3:>10.2f} {npy * 1e3:>10.2f} {npy / nb:>8.1f}x")


if __name__ == "__main__":
    main()
