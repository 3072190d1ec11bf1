"""The temporal group attention network."""
from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn

from ..config import ModelConfig
from ..errors import InvalidInputError
from .grouping import temporal_grouping
from .resample import bicubic_upsample, depth_to_space


class DilatedConv2d(nn.Conv2d):
    """3x3 conv whose dilation (and matching padding) is chosen per call."""

    def forward(self, x, dilation=1):
        return F.conv2d(x, self.weight, self.bias, padding=dilation, dilation=dilation)


class Unit2d(nn.Module):
    def __init__(self, in_ch, out_ch):
        super().__init__()
        self.conv = DilatedConv2d(in_ch, out_ch, 3)
        self.bn = nn.BatchNorm2d(out_ch)
        self.relu = nn.ReLU()

    def forward(self, x, dilation=1):
        return self.relu(self.bn(self.conv(x, dilation)))


class Unit3d(nn.Module):
    def __init__(self, in_ch, out_ch):
        super().__init__()
        self.conv = nn.Conv3d(in_ch, out_ch, 3, padding=1)
        self.bn = nn.BatchNorm3d(out_ch)
        self.relu = nn.ReLU()

    def forward(self, x):
        return self.relu(self.bn(self.conv(x)))


class DenseBlock(nn.Module):
    """Each unit sees the block input concatenated with all earlier unit outputs."""

    def __init__(self, n_units, in_ch, growth, dims=2):
        super().__init__()
        unit = Unit2d if dims == 2 else Unit3d
        self.units = nn.ModuleList(unit(in_ch + i * growth, growth) for i in range(n_units))
        self.out_channels = in_ch + n_units * growth

    def forward(self, x):
        feats = [x]
        for unit in self.units:
            feats.append(unit(torch.cat(feats, 1) if len(feats) > 1 else x))
        return torch.cat(feats, 1)


class IntraGroupFusion(nn.Module):
    """Dilated spatial extractor -> 3x3x3 fusion -> 2-D dense block -> 1x1 transition.

    One instance serves every group; only the dilation changes between calls.
    """

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        c = cfg.channels
        self.extractor = nn.ModuleList(
            Unit2d(3 if i == 0 else c, c) for i in range(cfg.extractor_units))
        self.fuse = nn.Conv3d(c, c, 3, padding=(0, 1, 1))
        self.dense = DenseBlock(cfg.intra_units, c, c)
        self.transition = nn.Conv2d(self.dense.out_channels, cfg.group_channels, 1)

    def forward(self, group, dilation=1):
        """``group``: [B, 3, C, H, W] (three frames) -> [B, C_g, H, W]."""
        if group.dim() != 5 or group.shape[1] != 3:
            raise InvalidInputError(f"group must be [B, 3, C, H, W], got {tuple(group.shape)}")
        b, t, c, h, w = group.shape
        x = group.reshape(b * t, c, h, w)
        for unit in self.extractor:
            x = unit(x, dilation)
        x = x.reshape(b, t, -1, h, w).transpose(1, 2)
        x = self.fuse(x).squeeze(2)
        return self.transition(self.dense(x))


class GroupAttention(nn.Module):
    """Shared 3x3 conv to one logit map per group, softmax across groups per pixel."""

    def __init__(self, group_channels):
        super().__init__()
        self.logit = nn.Conv2d(group_channels, 1, 3, padding=1)
        self.softmax = nn.Softmax(dim=1)

    def forward(self, feats):
        """``feats``: [B, N, C_g, H, W] -> (masks [B, N, H, W], weighted feats)."""
        b, n, c, h, w = feats.shape
        logits = self.logit(feats.reshape(b * n, c, h, w)).reshape(b, n, h, w)
        masks = self.softmax(logits)
        return masks, feats * masks.unsqueeze(2)


def group_attention(feats, attention: GroupAttention):
    if isinstance(feats, (list, tuple)):
        if not feats:
            raise InvalidInputError("group_attention needs at least one group")
        if len({tuple(f.shape) for f in feats}) != 1:
            raise InvalidInputError("all group features must share a shape")
        feats = torch.stack(feats, 1)
    if feats.shape[1] == 0:
        raise InvalidInputError("group_attention needs at least one group")
    return attention(feats)


class InterGroupFusion(nn.Module):
    """3-D dense block over the group axis, 1x3x3 collapse, 2-D dense block, residual head."""

    def __init__(self, cfg: ModelConfig, n_groups):
        super().__init__()
        c = cfg.channels
        self.n_groups = n_groups
        self.dense3d = DenseBlock(cfg.inter3d_units, cfg.group_channels, c, dims=3)
        # group axis is folded into channels first, so a 1x3x3 kernel sees all groups
        self.collapse = nn.Conv3d(self.dense3d.out_channels * n_groups, cfg.fusion_channels,
                                  (1, 3, 3), padding=(0, 1, 1))
        self.dense2d = DenseBlock(cfg.inter2d_units, cfg.fusion_channels, c)
        self.head = nn.Conv2d(self.dense2d.out_channels, 3 * cfg.scale ** 2, 3, padding=1)

    def forward(self, feats):
        """``feats``: [B, N, C_g, H, W] -> residual features [B, 3 r^2, H, W]."""
        if feats.dim() != 5 or feats.shape[1] != self.n_groups:
            raise InvalidInputError(
                f"expected [B, {self.n_groups}, C, H, W] group features, got {tuple(feats.shape)}")
        x = self.dense3d(feats.transpose(1, 2))
        b, c, n, h, w = x.shape
        x = x.transpose(1, 2).reshape(b, n * c, 1, h, w)
        x = self.collapse(x).squeeze(2)
        return self.head(self.dense2d(x))


class TGANet(nn.Module):
    def __init__(self, cfg: ModelConfig | None = None):
        super().__init__()
        cfg = cfg or ModelConfig()
        problems = cfg.problems()
        if problems:
            raise InvalidInputError("; ".join(problems))
        self.cfg = cfg
        self.plan = temporal_grouping(cfg.num_frames, cfg.grouping)
        self.intra = IntraGroupFusion(cfg)
        self.attention = GroupAttention(cfg.group_channels)
        self.inter = InterGroupFusion(cfg, len(self.plan))

    def group_features(self, x):
        feats = [self.intra(x[:, list(g)], d) for g, d in zip(self.plan.groups, self.plan.dilations)]
        return torch.stack(feats, 1)

    def forward(self, x, return_attention=False):
        """``x``: [B, T, 3, H, W] LR frames in [0, 1] -> [B, 3, rH, rW]."""
        if x.dim() == 4:
            return self.forward(x.unsqueeze(0), return_attention)[0] if not return_attention \
                else tuple(t[0] for t in self.forward(x.unsqueeze(0), True))
        if x.shape[1] != self.cfg.num_frames or x.shape[2] != 3:
            raise InvalidInputError(
                f"expected [B, {self.cfg.num_frames}, 3, H, W], got {tuple(x.shape)}")
        feats = self.group_features(x)
        if self.cfg.attention:
            masks, weighted = self.attention(feats)
        else:
            b, n, _, h, w = feats.shape
            masks = feats.new_full((b, n, h, w), 1.0 / n)
            weighted = feats
        residual = self.inter(weighted)
        out = reconstruct(residual, x[:, self.plan.reference], self.cfg.scale)
        return (out, masks) if return_attention else out


def reconstruct(residual, reference, scale):
    """HR frame = depth-to-space(residual) + bicubic(reference)."""
    if residual.shape[-3] != 3 * scale * scale:
        raise InvalidInputError(
            f"residual must have 3*r^2 = {3 * scale * scale} channels, got {residual.shape[-3]}")
    return depth_to_space(residual, scale) + bicubic_upsample(reference, scale)
