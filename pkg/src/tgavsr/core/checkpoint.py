"""Versioned checkpoint files.

A checkpoint is a ``torch.save`` container holding a manifest (format
version, tensor names and shapes, model config) next to the tensors and any
training state the caller attaches.
"""
from __future__ import annotations

import dataclasses
import os

import torch

from ..config import ModelConfig
from ..errors import DataError, InvalidInputError
from .network import TGANet

FORMAT_VERSION = 1


def manifest(model: TGANet):
    return {
        "format_version": FORMAT_VERSION,
        "model_config": dataclasses.asdict(model.cfg),
        "tensors": {k: list(v.shape) for k, v in model.state_dict().items()},
    }


def save_checkpoint(path, model: TGANet, **extra):
    payload = {"manifest": manifest(model), "state_dict": model.state_dict(), **extra}
    tmp = f"{path}.tmp"
    try:
        torch.save(payload, tmp)
        os.replace(tmp, path)
    except OSError as exc:
        raise DataError(f"cannot write checkpoint {path}: {exc}") from exc


def read_checkpoint(path):
    try:
        payload = torch.load(path, map_location="cpu", weights_only=False)
    except (OSError, RuntimeError, EOFError) as exc:
        raise DataError(f"cannot read checkpoint {path}: {exc}") from exc
    man = payload.get("manifest") if isinstance(payload, dict) else None
    if not man or man.get("format_version") != FORMAT_VERSION:
        raise DataError(f"{path}: not a version-{FORMAT_VERSION} checkpoint")
    return payload


def load_checkpoint(path, cfg: ModelConfig | None = None):
    """Rebuild the model stored at ``path``; returns ``(model, payload)``.

    If ``cfg`` is given the stored tensors must match the shapes it implies.
    """
    payload = read_checkpoint(path)
    stored = ModelConfig(**payload["manifest"]["model_config"])
    model = TGANet(cfg or stored)
    expected = {k: list(v.shape) for k, v in model.state_dict().items()}
    found = payload["manifest"]["tensors"]
    if expected != found:
        diffs = [f"{k}: expected {expected.get(k)}, found {found.get(k)}"
                 for k in sorted(set(expected) | set(found)) if expected.get(k) != found.get(k)]
        raise InvalidInputError(f"checkpoint {path} does not match the model config: "
                                + "; ".join(diffs[:5]) + (" ..." if len(diffs) > 5 else ""))
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model, payload
