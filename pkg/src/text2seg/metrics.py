"""Per-class confusion counting and the evaluation protocol.

Every class is scored as a binary problem: its predicted mask against
its ground-truth mask, skipping ignored pixels.  Counts are plain sums,
so per-tile results can be merged in any order.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .core import BinaryMask, DimensionMismatchError


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            self.tp + other.tp,
            self.fp + other.fp,
            self.fn + other.fn,
            self.tn + other.tn,
        )


def confusion_counts(
    pred: BinaryMask, gt: BinaryMask, ignore: Optional[BinaryMask] = None
) -> ConfusionCounts:
    """Count tp/fp/fn/tn over the pixels where ignore is unset."""
    if pred.bits.shape != gt.bits.shape:
        raise DimensionMismatchError(
            f"pred {pred.width}x{pred.height} vs gt {gt.width}x{gt.height}"
        )
    if ignore is not None and ignore.bits.shape != gt.bits.shape:
        raise DimensionMismatchError("ignore mask dimensions differ from ground truth")
    valid = np.ones(gt.bits.shape, dtype=bool) if ignore is None else ~ignore.bits
    p = pred.bits
    g = gt.bits
    tp = int((p & g & valid).sum())
    fp = int((p & ~g & valid).sum())
    fn = int((~p & g & valid).sum())
    tn = int((~p & ~g & valid).sum())
    return ConfusionCounts(tp, fp, fn, tn)


def iou(c: ConfusionCounts) -> float:
    """tp / (tp + fp + fn); an absent, unpredicted class scores 1.0.

    The 1.0 convention rewards correctly predicting nothing and keeps
    NaN out of the mean.
    """
    denom = c.tp + c.fp + c.fn
    if denom == 0:
        return 1.0
    return c.tp / denom


def oa(c: ConfusionCounts) -> float:
    """Binary accuracy (tp + tn) / total for one class."""
    if c.total == 0:
        raise ValueError("overall accuracy undefined with zero evaluated pixels")
    return (c.tp + c.tn) / c.total


@dataclass(frozen=True)
class ClassReport:
    class_id: int
    label: str
    counts: ConfusionCounts
    iou: float
    oa: float

    @classmethod
    def from_counts(cls, class_id: int, label: str, counts: ConfusionCounts) -> "ClassReport":
        return cls(class_id, label, counts, iou(counts), oa(counts))


@dataclass(frozen=True)
class DatasetReport:
    classes: tuple
    miou: float
    oa: float

    @property
    def class_reports(self) -> Sequence[ClassReport]:
        return self.classes


def aggregate(reports: Sequence[ClassReport]) -> DatasetReport:
    """Macro-average IoU and OA over classes."""
    if not reports:
        raise ValueError("cannot aggregate an empty report list")
    miou = float(np.mean([r.iou for r in reports]))
    mean_oa = float(np.mean([r.oa for r in reports]))
    return DatasetReport(tuple(reports), miou, mean_oa)


def best_over_classes(per_class_scores: Mapping) -> float:
    """Class-agnostic baseline score: the maximum over all classes."""
    if not per_class_scores:
        raise ValueError("no per-class scores to take a maximum over")
    return max(per_class_scores.values())
