"""Keyframe summarisation from block-texture histograms, with optional
colour fusion, plus the matching evaluation harness."""

from .codebook import Codebook, assign, kmeans, load_codebook, quantize, \
    save_codebook, train_codebook
from .errors import (FormatError, InputError, NoInformativeFramesError,
                     PipelineError, TexsumError, TrainingError)
from .evaluate import (EvalReport, GroundTruthWindow, MatchResult,
                       MetricBundle, aggregate, compression_ratio, cus_match,
                       detection_accuracy, evaluate_tree, metrics,
                       read_ground_truth, write_report)
from .features import dct_basis, dct_features, frame_features, zigzag_order
from .histograms import (FrameSignature, FusionWeights, bot_histogram,
                         fused_distance, hue_histogram, read_signatures,
                         write_signatures)
from .ingest import (Frame, FrameSequence, FrameSource, GrayFrame,
                     IngestConfig, decode_frames, downscale_half,
                     filter_noise, iter_frames, preprocess_frame, rgb_to_luma)
from .kernels import BACKEND, HAS_NUMBA
from .summarize import (FeatureConfig, Keyframe, Summary, SummaryConfig,
                        estimate_k, manifest_dict, summarise, write_manifest)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "Codebook", "EvalReport", "FeatureConfig", "FormatError",
    "Frame", "FrameSequence", "FrameSignature", "FrameSource",
    "FusionWeights", "GrayFrame", "GroundTruthWindow", "HAS_NUMBA",
    "IngestConfig", "InputError", "Keyframe", "MatchResult", "MetricBundle",
    "NoInformativeFramesError", "PipelineError", "Summary", "SummaryConfig",
    "TexsumError", "TrainingError", "aggregate", "assign", "bot_histogram",
    "compression_ratio", "cus_match", "dct_basis", "dct_features",
    "decode_frames", "detection_accuracy", "downscale_half", "estimate_k",
    "evaluate_tree", "filter_noise", "frame_features", "fused_distance",
    "hue_histogram", "iter_frames", "kmeans", "load_codebook",
    "manifest_dict", "metrics", "preprocess_frame", "quantize",
    "read_ground_truth", "read_signatures", "rgb_to_luma", "save_codebook",
    "summarise", "train_codebook", "write_manifest", "write_report",
    "write_signatures", "zigzag_order",
]
