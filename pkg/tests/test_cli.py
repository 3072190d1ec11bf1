import csv
import io
import json

import numpy as np
import pytest
import torch

from tgavsr.cli import main
from tgavsr.config import RunConfig, desk_preset
from tgavsr.core import TGANet
from tgavsr.core.checkpoint import save_checkpoint
from tgavsr.data import read_png, write_png
from tgavsr.data.synthetic import texture
from conftest import micro_config


def write_frames(directory, frames):
    directory.mkdir(parents=True, exist_ok=True)
    for t, f in enumerate(frames):
        write_png(directory / f"frame_{t:05d}.png", f)
    return directory


@pytest.fixture
def hr_clip(tmp_path):
    rng = np.random.default_rng(0)
    return write_frames(tmp_path / "hr" / "clip0", [texture(64, 64, rng) for _ in range(10)])


@pytest.fixture
def micro_ckpt(tmp_path):
    torch.manual_seed(0)
    path = tmp_path / "micro.bin"
    save_checkpoint(path, TGANet(micro_config(num_frames=3, scale=4)).eval())
    return path


def test_degrade_writes_mirrored_tree_idempotently(tmp_path, hr_clip):
    out = tmp_path / "lr"
    assert main(["degrade", str(tmp_path / "hr"), str(out)]) == 0
    files = sorted((out / "clip0").glob("*.png"))
    assert len(files) == 10 and read_png(files[0]).shape == (3, 16, 16)
    before = [f.read_bytes() for f in files]
    assert main(["degrade", str(tmp_path / "hr"), str(out)]) == 0
    assert [f.read_bytes() for f in files] == before


def test_degrade_reports_offending_file(tmp_path, capsys):
    write_frames(tmp_path / "bad", [np.zeros((3, 255, 255))])
    assert main(["degrade", str(tmp_path / "bad"), str(tmp_path / "o"), "--scale", "4"]) == 3
    assert "frame_00000.png" in capsys.readouterr().err


def test_config_errors_listed_together(tmp_path, capsys):
    code = main(["train", "--model.channels", "0", "--train.lr_decay", "2", "--out", str(tmp_path)])
    err = capsys.readouterr().err
    assert code == 2
    assert "model.channels" in err and "train.lr_decay" in err


def test_unknown_config_key_rejected(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("[model]\nchannels = 8\nbogus = 1\n")
    assert main(["profile", "--config", str(cfg)]) == 2
    assert "model.bogus" in capsys.readouterr().err


def test_help_lists_every_key(capsys):
    with pytest.raises(SystemExit):
        main(["train", "--help"])
    out = capsys.readouterr().out
    assert all(f"--{k}" in out for k in RunConfig().keys())


def test_config_round_trip():
    cfg = desk_preset()
    cfg.set("align.ratio", "0.7")
    text = cfg.dumps()
    assert RunConfig.loads(text) == cfg
    assert RunConfig.loads(text).dumps() == text


def test_profile_json_and_desk_smaller(capsys):
    assert main(["profile", "--preset", "paper", "--size", "112x64", "--json"]) == 0
    paper = json.loads(capsys.readouterr().out)
    assert main(["profile", "--preset", "desk", "--json"]) == 0
    desk = json.loads(capsys.readouterr().out)
    assert set(paper) >= {"params", "flops"} and desk["params"] < paper["params"]


TRAIN_ARGS = ["train", "--preset", "desk", "--synthetic", "2", "--train.epochs", "1",
              "--train.iters_per_epoch", "2", "--train.batch_size", "2", "--seed", "3"]


def test_train_frames_and_no_attention(tmp_path):
    out = tmp_path / "run"
    assert main(TRAIN_ARGS + ["--frames", "5", "--no-attention", "--out", str(out)]) == 0
    payload = torch.load(out / "ckpt_epoch0.bin", weights_only=False)
    model_cfg = payload["manifest"]["model_config"]
    assert model_cfg["num_frames"] == 5 and model_cfg["attention"] is False


def test_train_seed_is_deterministic(tmp_path):
    logs = []
    for name in ("a", "b"):
        assert main(TRAIN_ARGS + ["--out", str(tmp_path / name)]) == 0
        logs.append((tmp_path / name / "metrics.csv").read_text())
    assert logs[0] == logs[1]


def test_infer_shapes_align_and_attention(tmp_path, micro_ckpt, capsys):
    rng = np.random.default_rng(1)
    lr = write_frames(tmp_path / "lr", [texture(16, 16, rng) for _ in range(10)])
    out = tmp_path / "sr"
    assert main(["infer", "--checkpoint", str(micro_ckpt), "--input", str(lr), "--output", str(out),
                 "--dump-attention", str(tmp_path / "att")]) == 0
    frames = sorted(out.glob("frame_*.png"))
    assert len(frames) == 10 and read_png(frames[0]).shape == (3, 64, 64)
    assert (tmp_path / "att" / "frame_00000_mask_1.png").exists()
    side = tmp_path / "h.txt"
    assert main(["infer", "--checkpoint", str(micro_ckpt), "--input", str(lr), "--output",
                 str(tmp_path / "sr2"), "--align", "--homography-cache", str(side)]) == 0
    assert "9 pairwise estimations" in capsys.readouterr().out
    assert len(side.read_text().splitlines()) == 1 + 9


def test_infer_static_scene_align_matches_unaligned(micro_ckpt):
    from tgavsr.config import AlignConfig
    from tgavsr.core.checkpoint import load_checkpoint
    from tgavsr.infer import super_resolve

    model, _ = load_checkpoint(micro_ckpt)
    frame = texture(64, 64, np.random.default_rng(2))
    video = np.stack([frame] * 5)
    plain = super_resolve(model, video)
    aligned = super_resolve(model, video, AlignConfig(enabled=True))
    assert np.abs(plain - aligned).max() <= 1e-3


def test_infer_checkpoint_mismatch(tmp_path, micro_ckpt, capsys):
    lr = write_frames(tmp_path / "lr", [np.zeros((3, 16, 16))] * 3)
    code = main(["infer", "--checkpoint", str(micro_ckpt), "--input", str(lr), "--output",
                 str(tmp_path / "o"), "--preset", "desk"])
    assert code == 2
    assert "expected" in capsys.readouterr().err


def test_align_command_writes_sidecar(tmp_path, hr_clip, capsys):
    assert main(["align", str(hr_clip), str(tmp_path / "al"), "--model.num_frames", "3",
                 "--reference", "4"]) == 0
    assert (tmp_path / "al" / "homographies.txt").exists()
    assert len(list((tmp_path / "al" / "window_00004").glob("frame_*.png"))) == 3


def _eval_rows(capsys, argv):
    assert main(argv) == 0
    return list(csv.DictReader(io.StringIO(capsys.readouterr().out)))


def test_eval_rows(tmp_path, hr_clip, capsys):
    rows = _eval_rows(capsys, ["eval", "--pred", str(hr_clip), "--gt", str(hr_clip), "--summary-only"])
    assert rows == [{"method": "TGA", "clip": "clip0", "channel": "Y", "crop": "0", "frame": "mean",
                     "psnr": "inf", "ssim": "1.0000"}]
    main(["degrade", str(hr_clip), str(tmp_path / "lr")])
    capsys.readouterr()
    rows = _eval_rows(capsys, ["eval", "--lr", str(tmp_path / "lr"), "--gt", str(hr_clip),
                               "--crop", "0", "--crop", "8", "--channel", "rgb", "--summary-only"])
    assert [(r["method"], r["channel"], r["crop"]) for r in rows] == \
        [("Bicubic", "RGB", "0"), ("Bicubic", "RGB", "8")]
    assert rows[0]["psnr"] != rows[1]["psnr"] and float(rows[0]["psnr"]) < 100
    rows = _eval_rows(capsys, ["eval", "--pred", str(hr_clip), "--gt", str(hr_clip), "--duf-crop",
                               "--summary-only"])
    assert [r["crop"] for r in rows] == ["0", "8"]


def test_eval_frame_count_mismatch(tmp_path, hr_clip, capsys):
    short = write_frames(tmp_path / "short", [read_png(hr_clip / "frame_00000.png")] * 3)
    assert main(["eval", "--pred", str(short), "--gt", str(hr_clip)]) == 3
    assert "frames" in capsys.readouterr().err
