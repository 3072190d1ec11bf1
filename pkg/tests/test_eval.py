import math

import numpy as np
import pytest
import torch
from torch import nn

from tgavsr.config import ModelConfig
from tgavsr.core import TGANet
from tgavsr.errors import InvalidInputError
from tgavsr.evaluation import (MetricReport, export_attention, model_stats, psnr, ssim,
                               temporal_profile, to_luma, write_csv)
from tgavsr.evaluation.visualize import attention_masks
from conftest import small_config


def test_luma_examples():
    for v, expect in ((1.0, 235), (0.0, 16), (0.5, 125.5)):
        assert abs(to_luma(np.full((3, 2, 2), v))[0, 0] - expect / 255) <= 1e-6
    v = np.linspace(0, 1, 12).reshape(1, 3, 4).repeat(3, 0)
    np.testing.assert_allclose(to_luma(v), (16 + 219 * v[0]) / 255, atol=1e-6)
    with pytest.raises(InvalidInputError):
        to_luma(np.zeros((4, 2, 2)))


def test_psnr_analytic():
    a = np.random.default_rng(0).random((3, 16, 16)) * 0.5
    assert psnr(a, a) == math.inf
    assert abs(psnr(a, a + 1 / 255) - 20 * math.log10(255)) < 1e-9
    assert abs(psnr(np.zeros((4, 4)), np.ones((4, 4)))) < 1e-12
    with pytest.raises(InvalidInputError):
        psnr(np.zeros((4, 4)), np.zeros((4, 5)))


def test_psnr_symmetric_and_monotone(rng):
    a, b = rng.random((16, 16)), rng.random((16, 16))
    assert psnr(a, b) == psnr(b, a)
    vals = [psnr(a, a + e) for e in (0.01, 0.02, 0.05)]
    assert vals[0] > vals[1] > vals[2]


def psnr_oracle(a, b, crop):
    a, b = a[..., crop:a.shape[-2] - crop, crop:a.shape[-1] - crop], \
        b[..., crop:b.shape[-2] - crop, crop:b.shape[-1] - crop]
    total = n = 0.0
    for x, y in zip(a.ravel(), b.ravel()):
        total += (x - y) ** 2
        n += 1
    return 10 * math.log10(1.0 / (total / n))


def ssim_oracle(a, b):
    """Loop-based SSIM: Gaussian 11x11 (sigma 1.5) window, valid positions only."""
    g = [math.exp(-((i - 5) ** 2) / (2 * 1.5 ** 2)) for i in range(11)]
    w = np.outer(g, g) / sum(g) ** 2
    c1, c2 = 0.01 ** 2, 0.03 ** 2
    h, wd = a.shape
    vals = []
    for y in range(h - 10):
        for x in range(wd - 10):
            pa, pb = a[y:y + 11, x:x + 11], b[y:y + 11, x:x + 11]
            ma, mb = (w * pa).sum(), (w * pb).sum()
            va = (w * pa * pa).sum() - ma * ma
            vb = (w * pb * pb).sum() - mb * mb
            cov = (w * pa * pb).sum() - ma * mb
            vals.append((2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2)))
    return float(np.mean(vals))


@pytest.fixture
def fixture_pair(textured):
    a = to_luma(textured[:, :40, :48]).astype(np.float64)
    return a, np.clip(a + 0.05, 0, 1)


def test_psnr_matches_oracle(fixture_pair, rng):
    a = fixture_pair[0]
    b = np.clip(a + rng.normal(0, 0.03, a.shape), 0, 1)
    for crop in (0, 8):
        assert abs(psnr(a, b, crop) - psnr_oracle(a, b, crop)) <= 1e-4


def test_ssim_matches_oracle(fixture_pair, rng):
    a, b = fixture_pair
    assert abs(ssim(a, b) - ssim_oracle(a, b)) <= 1e-4
    noisy = np.clip(a + rng.normal(0, 0.05, a.shape), 0, 1)
    assert abs(ssim(a, noisy) - ssim_oracle(a, noisy)) <= 1e-4


def test_ssim_closed_forms(rng):
    a = rng.random((20, 20))
    assert ssim(a, a) == pytest.approx(1.0, abs=1e-12)
    b = rng.random((20, 20))
    assert abs(ssim(a, b) - ssim(b, a)) <= 1e-7
    c1, c2 = 0.01 ** 2, 0.03 ** 2
    expect = (2 * 0 * 1 + c1) * (2 * 0 + c2) / ((0 + 1 + c1) * (0 + 0 + c2))
    assert ssim(np.zeros((16, 16)), np.ones((16, 16))) == pytest.approx(expect, abs=1e-9)
    with pytest.raises(InvalidInputError):
        ssim(np.zeros((8, 8)), np.zeros((8, 8)))


def test_report_rows_and_csv(tmp_path, rng):
    gt = rng.random((3, 32, 32))
    reps = []
    for crop in (0, 8):
        r = MetricReport("y", crop, "M", "clip")
        r.add("0", gt, gt)
        reps.append(r)
    assert reps[0].psnr == math.inf and reps[0].ssim == 1.0
    write_csv(tmp_path / "r.csv", reps, per_frame=False)
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "method,clip,channel,crop,frame,psnr,ssim"
    assert lines[1:] == ["M,clip,Y,0,mean,inf,1.0000", "M,clip,Y,8,mean,inf,1.0000"]


def test_temporal_profile():
    static = np.tile(np.random.default_rng(0).random((1, 6, 8)), (5, 1, 1))
    prof = temporal_profile(static, 2)
    assert prof.shape == (5, 8) and (prof == prof[0]).all()
    moving = np.zeros((5, 6, 8))
    for t in range(5):
        moving[t, 3, 1 + t] = 1.0
    prof = temporal_profile(moving, 3)
    assert [tuple(p) for p in np.argwhere(prof)] == [(t, 1 + t) for t in range(5)]
    with pytest.raises(InvalidInputError):
        temporal_profile(moving, 6)


def test_stats_single_conv_and_empty():
    conv = nn.Conv2d(3, 16, 3, padding=1)
    s = model_stats(conv, (1, 3, 64, 64))
    assert s.params == 448 and s.flops == 2 * 9 * 3 * 16 * 64 * 64
    assert (model_stats(nn.Sequential(), (1, 3, 4, 4)).params,
            model_stats(nn.Sequential(), (1, 3, 4, 4)).flops) == (0, 0)


def test_stats_additive():
    a, b = nn.Conv2d(3, 8, 3, padding=1), nn.Sequential(nn.Conv2d(8, 4, 1), nn.ReLU())
    whole = model_stats(nn.Sequential(a, b), (1, 3, 16, 16))
    assert whole == model_stats(a, (1, 3, 16, 16)) + model_stats(b, (1, 8, 16, 16))


def test_stats_config_matches_module():
    cfg = small_config()
    torch.manual_seed(0)
    by_cfg = model_stats(cfg, (20, 12))
    by_mod = model_stats(TGANet(cfg), (1, 7, 3, 12, 20))
    assert by_cfg == by_mod
    assert model_stats(ModelConfig(), (112, 64)).params > by_cfg.params


def test_export_attention(tmp_path):
    torch.manual_seed(0)
    model = TGANet(small_config(attention=False))
    seq = np.random.default_rng(0).random((7, 3, 64, 64)).astype(np.float32)
    masks = export_attention(model, seq, tmp_path)
    assert masks.shape == (3, 64, 64)
    np.testing.assert_allclose(masks, 1 / 3)
    assert sorted(p.name for p in tmp_path.iterdir()) == \
        ["mask_1.png", "mask_2.png", "mask_3.png", "mask_montage.png"]


def test_attention_masks_normalized():
    torch.manual_seed(1)
    model = TGANet(small_config())
    masks = attention_masks(model, np.random.default_rng(1).random((7, 3, 16, 16)))
    np.testing.assert_allclose(masks.sum(0), 1.0, atol=1e-5)
