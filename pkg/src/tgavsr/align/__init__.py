from .homography import (Homography, PairwiseCache, compose_chain, corner_error,
                         estimate_pairwise_homography, fit_dlt, invert, load_sidecar,
                         save_sidecar, translation)
from .pipeline import ALIGNED, KEPT, AlignmentResult, VideoAligner, align_sequence
from .warp import roundtrip_error, warp_frame

__all__ = [
    "Homography", "PairwiseCache", "compose_chain", "corner_error",
    "estimate_pairwise_homography", "fit_dlt", "invert", "load_sidecar", "save_sidecar",
    "translation", "ALIGNED", "KEPT", "AlignmentResult", "VideoAligner", "align_sequence",
    "roundtrip_error", "warp_frame",
]
