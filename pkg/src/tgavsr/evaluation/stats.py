"""Parameter and FLOP accounting.

FLOPs follow one convention throughout: a multiply-accumulate is 2 FLOPs,
conv biases are free, and every BatchNorm, ReLU or softmax output element
costs 2 FLOPs. Bicubic upsampling of the reference and the final residual
addition are not part of the network and are not counted.
"""
from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

from ..config import ModelConfig

ELEMENTWISE = (nn.BatchNorm2d, nn.BatchNorm3d, nn.ReLU, nn.Softmax)


@dataclass(frozen=True)
class ModelStats:
    params: int
    flops: int

    @property
    def macs(self):
        return self.flops // 2

    def __add__(self, other):
        return ModelStats(self.params + other.params, self.flops + other.flops)

    def as_dict(self):
        return {"params": self.params, "flops": self.flops, "macs": self.macs}


def _conv_flops(module, output):
    kernel = 1
    for k in module.kernel_size:
        kernel *= k
    per_out = kernel * (module.in_channels // module.groups)
    return 2 * per_out * output.numel()


def count_flops(model: nn.Module, *inputs):
    """Run ``model`` on meta tensors and sum FLOPs over conv and elementwise modules."""
    total = 0

    def hook(module, args, output):
        nonlocal total
        if isinstance(module, (nn.Conv2d, nn.Conv3d)):
            total += _conv_flops(module, output)
        elif isinstance(module, ELEMENTWISE):
            total += 2 * output.numel()

    handles = [m.register_forward_hook(hook) for m in model.modules()
               if isinstance(m, (nn.Conv2d, nn.Conv3d) + ELEMENTWISE)]
    was_training = model.training
    try:
        model.eval()
        with torch.no_grad():
            model(*inputs)
    finally:
        model.train(was_training)
        for h in handles:
            h.remove()
    return total


def count_params(model: nn.Module):
    return sum(p.numel() for p in model.parameters())


def model_stats(model, input_size, batch=1):
    """Stats of ``model`` at a given LR input size.

    ``model`` is a :class:`ModelConfig` (the network is built on the meta
    device, so nothing is allocated) or any ``nn.Module``. ``input_size`` is
    ``(width, height)`` for a ModelConfig, or the full input shape for a module.
    """
    if isinstance(model, ModelConfig):
        from ..core.network import TGANet

        with torch.device("meta"):
            net = TGANet(model)
        w, h = input_size
        x = torch.empty(batch, model.num_frames, 3, h, w, device="meta")
        return ModelStats(count_params(net), count_flops(net, x))
    params = count_params(model)
    if params == 0 and not any(isinstance(m, (nn.Conv2d, nn.Conv3d) + ELEMENTWISE)
                               for m in model.modules()):
        return ModelStats(0, 0)
    device = next((p.device for p in model.parameters()), torch.device("cpu"))
    x = torch.zeros(*input_size, device=device)
    return ModelStats(params, count_flops(model, x))
