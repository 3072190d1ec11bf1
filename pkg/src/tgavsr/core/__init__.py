from .checkpoint import load_checkpoint, save_checkpoint
from .grouping import GroupingPlan, temporal_grouping
from .network import (DenseBlock, GroupAttention, InterGroupFusion, IntraGroupFusion, TGANet,
                      group_attention, reconstruct)
from .resample import bicubic_upsample, depth_to_space

__all__ = [
    "GroupingPlan", "temporal_grouping", "TGANet", "IntraGroupFusion", "InterGroupFusion",
    "GroupAttention", "DenseBlock", "group_attention", "reconstruct", "bicubic_upsample",
    "depth_to_space", "load_checkpoint", "save_checkpoint",
]
