"""Batch evaluation: run strategies over a dataset and emit reports.

Tiles are independent work units executed on a bounded thread pool;
results are merged in a fixed key order, so two runs with the same
config and inputs are byte-identical regardless of parallelism.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .backends import Backend, RemoteBackend
from .core import BinaryMask
from .dataset import (
    DatasetManifest,
    decode_gt,
    load_gt_raster,
    load_image,
    load_manifest,
    stitch,
    tile_image,
)
from .metrics import (
    ClassReport,
    ConfusionCounts,
    aggregate,
    best_over_classes,
    confusion_counts,
)
from .mock import MockDirectoryBackend
from .promptgen import ClassSpec, PointSamplingConfig
from .strategies import (
    FilterConfig,
    StrategyId,
    StrategyParams,
    run_baseline,
    run_strategy,
)

BASELINE_KEY = "baseline"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    manifest: Path
    backend: str  # "mock:DIR" or "remote:URL"
    strategies: tuple
    augment: bool = False
    baseline: bool = False
    seed: int = 0
    params: StrategyParams = field(default_factory=StrategyParams)
    out_dir: Optional[Path] = None
    parallelism: int = 1

    def __post_init__(self):
        object.__setattr__(self, "manifest", Path(self.manifest))
        strategies = tuple(
            s if isinstance(s, StrategyId) else StrategyId(s) for s in self.strategies
        )
        object.__setattr__(self, "strategies", strategies)
        if not strategies:
            raise ConfigError("at least one strategy is required")
        if self.parallelism < 1:
            raise ConfigError("parallelism must be >= 1")

    def snapshot(self) -> dict:
        return {
            "manifest": str(self.manifest),
            "backend": self.backend,
            "strategies": [s.value for s in self.strategies],
            "augment": self.augment,
            "baseline": self.baseline,
            # parallelism is an execution knob, not a semantic input:
            # records must be identical across worker counts
            "seed": self.seed,
            "params": {
                "box_threshold": self.params.box_threshold,
                "text_threshold": self.params.text_threshold,
                "point_threshold": self.params.point_sampling.threshold,
                "max_points": self.params.point_sampling.max_points,
                "grid_n": self.params.grid_n,
                "background_phrases": list(self.params.filter.background_phrases),
                "s5_fresh_gallery": self.params.s5_fresh_gallery,
            },
        }


def make_backend(spec: str) -> Backend:
    if spec.startswith("mock:"):
        return MockDirectoryBackend(spec[len("mock:") :])
    if spec.startswith("remote:"):
        return RemoteBackend(spec[len("remote:") :])
    raise ConfigError(f"backend must be mock:DIR or remote:URL, got {spec!r}")


def _report_to_json(r: ClassReport) -> dict:
    return {
        "class_id": r.class_id,
        "label": r.label,
        "counts": [r.counts.tp, r.counts.fp, r.counts.fn, r.counts.tn],
        "iou": float(r.iou),
        "oa": float(r.oa),
    }


def _report_from_json(obj: dict) -> ClassReport:
    tp, fp, fn, tn = obj["counts"]
    return ClassReport(
        int(obj["class_id"]),
        obj["label"],
        ConfusionCounts(tp, fp, fn, tn),
        float(obj["iou"]),
        float(obj["oa"]),
    )


@dataclass(frozen=True)
class RunRecord:
    """Everything a run produced; JSON round-trips losslessly."""

    config: dict
    dataset: str
    class_labels: tuple  # label per class id, in id order
    strategy_order: tuple  # report column order, baseline last if present
    item_reports: tuple  # per item: {"item": idx, "reports": {strategy: [ClassReport...]}}
    dataset_reports: dict  # strategy -> {"classes": [...], "miou": x, "oa": y}
    baseline_best: Optional[dict] = None  # {"iou": x, "oa": y}
    failures: tuple = ()

    def to_json(self) -> dict:
        return {
            "config": self.config,
            "dataset": self.dataset,
            "class_labels": list(self.class_labels),
            "strategy_order": list(self.strategy_order),
            "item_reports": [
                {
                    "item": entry["item"],
                    "reports": {
                        s: [_report_to_json(r) for r in reports]
                        for s, reports in sorted(entry["reports"].items())
                    },
                }
                for entry in self.item_reports
            ],
            "dataset_reports": {
                s: {
                    "classes": [_report_to_json(r) for r in body["classes"]],
                    "miou": float(body["miou"]),
                    "oa": float(body["oa"]),
                }
                for s, body in sorted(self.dataset_reports.items())
            },
            "baseline_best": self.baseline_best,
            "failures": list(self.failures),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RunRecord":
        return cls(
            config=obj["config"],
            dataset=obj["dataset"],
            class_labels=tuple(obj["class_labels"]),
            strategy_order=tuple(obj["strategy_order"]),
            item_reports=tuple(
                {
                    "item": entry["item"],
                    "reports": {
                        s: [_report_from_json(r) for r in reports]
                        for s, reports in entry["reports"].items()
                    },
                }
                for entry in obj["item_reports"]
            ),
            dataset_reports={
                s: {
                    "classes": [_report_from_json(r) for r in body["classes"]],
                    "miou": float(body["miou"]),
                    "oa": float(body["oa"]),
                }
                for s, body in obj["dataset_reports"].items()
            },
            baseline_best=obj.get("baseline_best"),
            failures=tuple(obj.get("failures", ())),
        )

    def to_bytes(self) -> bytes:
        return json.dumps(self.to_json(), sort_keys=True, indent=2).encode("utf-8") + b"\n"


def _baseline_seed(base: int, item_idx: int, tile_idx: int) -> int:
    # stable per (run, item, tile); any fixed mixing works
    return (base * 1000003 + item_idx * 8191 + tile_idx) & 0x7FFFFFFF


def evaluate(config: RunConfig, backend: Optional[Backend] = None) -> RunRecord:
    """Run the configured strategies over every dataset item."""
    manifest = load_manifest(config.manifest)
    backend = backend or make_backend(config.backend)
    specs = {
        c.id: (c if config.augment else c.without_augmentation()) for c in manifest.classes
    }
    class_ids = sorted(specs)

    item_inputs = []  # (idx, grid, tiles, gt_masks, ignore)
    failures: List[str] = []
    for idx, item in enumerate(manifest.items):
        try:
            image = load_image(item.image)
            grid, tiles = tile_image(image, manifest.tile_size)
            gt_masks = None
            ignore = None
            if item.gt is not None:
                gt_masks, ignore = decode_gt(load_gt_raster(item.gt), manifest)
            item_inputs.append((idx, grid, tiles, gt_masks, ignore))
        except Exception as exc:
            failures.append(f"item {idx} ({item.image.name}): {exc}")

    # flatten to tile-level tasks with a total deterministic key order
    tasks: List[Tuple[tuple, object]] = []
    for idx, grid, tiles, _, _ in item_inputs:
        for strategy in config.strategies:
            for cid in class_ids:
                for t_idx, tile in enumerate(tiles):
                    key = (idx, strategy.value, cid, t_idx)
                    tasks.append(
                        (key, (run_strategy, (backend, tile, specs[cid], strategy, config.params)))
                    )
        if config.baseline:
            for t_idx, tile in enumerate(tiles):
                key = (idx, BASELINE_KEY, -1, t_idx)
                seed = _baseline_seed(config.seed, idx, t_idx)
                tasks.append((key, (run_baseline, (backend, tile, seed))))

    results: Dict[tuple, BinaryMask] = {}
    errors: Dict[int, str] = {}

    def run_task(entry):
        key, (fn, args) = entry
        out = fn(*args)
        return key, out.final if fn is run_strategy else out

    if config.parallelism == 1:
        completed = map(run_task, tasks)
    else:
        pool = ThreadPoolExecutor(max_workers=config.parallelism)
        completed = pool.map(run_task, tasks)
    try:
        for key, mask in completed:
            results[key] = mask
    except Exception as exc:
        raise RuntimeError(f"strategy execution failed: {exc}") from exc
    finally:
        if config.parallelism != 1:
            pool.shutdown()

    item_reports = []
    totals: Dict[Tuple[str, int], ConfusionCounts] = {}
    for idx, grid, tiles, gt_masks, ignore in item_inputs:
        n_tiles = len(tiles)
        per_strategy: Dict[str, list] = {}
        keys = [s.value for s in config.strategies] + ([BASELINE_KEY] if config.baseline else [])
        for skey in keys:
            reports = []
            for cid in class_ids:
                lookup_cid = -1 if skey == BASELINE_KEY else cid
                tile_masks = [results[(idx, skey, lookup_cid, t)] for t in range(n_tiles)]
                pred = stitch(grid, tile_masks)
                if gt_masks is None:
                    continue
                counts = confusion_counts(pred, gt_masks[cid], ignore)
                reports.append(
                    ClassReport.from_counts(cid, manifest.class_by_id(cid).label, counts)
                )
                tkey = (skey, cid)
                totals[tkey] = totals.get(tkey, ConfusionCounts()) + counts
            if reports:
                per_strategy[skey] = reports
        item_reports.append({"item": idx, "reports": per_strategy})

    strategy_order = [s.value for s in config.strategies]
    if config.baseline:
        strategy_order.append(BASELINE_KEY)

    dataset_reports = {}
    baseline_best = None
    for skey in strategy_order:
        reports = [
            ClassReport.from_counts(cid, manifest.class_by_id(cid).label, totals[(skey, cid)])
            for cid in class_ids
            if (skey, cid) in totals
        ]
        if not reports:
            continue
        agg = aggregate(reports)
        dataset_reports[skey] = {"classes": reports, "miou": agg.miou, "oa": agg.oa}
        if skey == BASELINE_KEY:
            baseline_best = {
                "iou": best_over_classes({r.class_id: r.iou for r in reports}),
                "oa": best_over_classes({r.class_id: r.oa for r in reports}),
            }

    return RunRecord(
        config=config.snapshot(),
        dataset=manifest.name,
        class_labels=tuple(manifest.class_by_id(c).label for c in class_ids),
        strategy_order=tuple(strategy_order),
        item_reports=tuple(item_reports),
        dataset_reports=dataset_reports,
        baseline_best=baseline_best,
        failures=tuple(failures),
    )


def _fmt(x: float) -> str:
    return f"{x:.3f}"


def emit_report(record: RunRecord, format: str = "markdown") -> bytes:
    """Render the dataset-level report; column order follows the run."""
    if format == "json":
        return record.to_bytes()
    order = [s for s in record.strategy_order if s in record.dataset_reports]
    by_class: Dict[int, Dict[str, ClassReport]] = {}
    for skey in order:
        for r in record.dataset_reports[skey]["classes"]:
            by_class.setdefault(r.class_id, {})[skey] = r
    header = ["Dataset", "Class"]
    for skey in order:
        header += [f"{skey}_IoU", f"{skey}_OA"]
    rows = []
    for cid in sorted(by_class):
        label = record.class_labels[cid] if cid < len(record.class_labels) else str(cid)
        row = [record.dataset, label]
        for skey in order:
            r = by_class[cid].get(skey)
            row += [_fmt(r.iou), _fmt(r.oa)] if r else ["", ""]
        rows.append(row)
    overall = [record.dataset, "Overall"]
    for skey in order:
        body = record.dataset_reports[skey]
        overall += [_fmt(body["miou"]), _fmt(body["oa"])]
    rows.append(overall)

    if format == "csv":
        lines = [",".join(header)] + [",".join(row) for row in rows]
        return ("\n".join(lines) + "\n").encode("utf-8")
    if format in ("markdown", "md"):
        lines = [
            "| " + " | ".join(header) + " |",
            "|" + "|".join(["---"] * len(header)) + "|",
        ]
        lines += ["| " + " | ".join(row) + " |" for row in rows]
        return ("\n".join(lines) + "\n").encode("utf-8")
    raise ValueError(f"unknown report format {format!r}")
