import numpy as np
import pytest

from tgavsr import kernels
from tgavsr._jit import USE_NUMBA

pytestmark = pytest.mark.skipif(not USE_NUMBA, reason="numba backend disabled")


def test_warp_backends_agree(rng):
    src = rng.random((3, 40, 50)).astype(np.float32)
    hinv = np.array([[1.01, 0.02, -3.3], [-0.01, 0.99, 2.2], [1e-4, -2e-4, 1.0]])
    a = kernels.warp_bilinear_nb(src, hinv)
    b = kernels.warp_bilinear_np(src, hinv)
    np.testing.assert_allclose(a[0], b[0], atol=1e-6)
    np.testing.assert_array_equal(a[1], b[1])


def test_hamming_backends_agree(rng):
    a = rng.integers(0, 256, (30, 32), dtype=np.uint8)
    b = rng.integers(0, 256, (40, 32), dtype=np.uint8)
    expect = np.unpackbits(a[:, None] ^ b[None], axis=2).sum(2)
    np.testing.assert_array_equal(kernels.hamming_matrix_nb(a, b, kernels.POPCOUNT), expect)
    np.testing.assert_array_equal(kernels.hamming_matrix_np(a, b, kernels.POPCOUNT), expect)


def test_distance_backends_agree(rng):
    a, b = rng.random((20, 128)).astype(np.float32), rng.random((25, 128)).astype(np.float32)
    np.testing.assert_allclose(kernels.sq_distance_matrix_nb(a, b),
                               kernels.sq_distance_matrix_np(a, b), rtol=1e-4)


def test_ransac_scoring_backends_agree(rng):
    src = rng.random((60, 2)) * 100
    dst = src + np.array([2.0, -1.0]) + rng.normal(0, 0.5, (60, 2))
    dst[:15] = rng.random((15, 2)) * 100
    samples = np.stack([rng.choice(60, 4, replace=False) for _ in range(200)])
    samples[0] = [0, 0, 1, 2]  # degenerate sample
    a = kernels.ransac_counts_nb(src, dst, samples, 3.0)
    b = kernels.ransac_counts_np(src, dst, samples, 3.0)
    np.testing.assert_array_equal(a, b)
    assert a[0] == -1
