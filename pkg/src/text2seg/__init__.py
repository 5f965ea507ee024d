"""Composable text-conditioned zero-shot segmentation engine.

Pluggable vision backends (mock or remote) feed five prompting
strategies; an evaluation harness scores per-class masks and renders
dataset reports.
"""

from .core import (
    BBox,
    BinaryMask,
    ImageRaster,
    InstanceMask,
    PointPrompt,
    RleMask,
    SimilarityMap,
    crop_to_bbox,
    mask_iou,
    mask_union,
    normalize_similarity_map,
    rle_decode,
    rle_encode,
)
from .metrics import ConfusionCounts, aggregate, best_over_classes, confusion_counts, iou, oa
from .promptgen import ClassSpec, PointSamplingConfig, VisualPrompt
from .strategies import FilterConfig, StrategyId, StrategyParams, run_baseline, run_strategy
from .backends import Backend, BackendError, Capability, RemoteBackend
from .mock import MockBackend, MockDirectoryBackend, MockScene, Shape, generate_scene
from .harness import RunConfig, RunRecord, emit_report, evaluate

__version__ = "0.1.0"
