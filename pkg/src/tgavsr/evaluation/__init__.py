from .metrics import MetricReport, format_table, psnr, ssim, to_luma, write_csv
from .stats import ModelStats, model_stats
from .visualize import export_attention, temporal_profile

__all__ = [
    "MetricReport", "format_table", "psnr", "ssim", "to_luma", "write_csv", "ModelStats",
    "model_stats", "export_attention", "temporal_profile",
]
