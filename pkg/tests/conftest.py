import json
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from text2seg.core import BinaryMask
from text2seg.mock import MockScene, generate_scene


def mask(rows):
    return BinaryMask(np.asarray(rows, dtype=bool))


def save_png(path: Path, array: np.ndarray):
    Image.fromarray(array).save(path)


def build_mock_dataset(
    root: Path,
    scenes,
    classes,
    label_to_class=None,
    tile_size=64,
    ignore_index=255,
    name="mockset",
):
    """Write scenes + rendered images + index ground truth + manifest.

    ``classes`` is a list of {"id", "label", "synonyms"} dicts;
    ``label_to_class`` maps a shape label to its class id (defaults to
    matching the class label).
    """
    root.mkdir(parents=True, exist_ok=True)
    scene_dir = root / "scenes"
    scene_dir.mkdir(exist_ok=True)
    if label_to_class is None:
        label_to_class = {c["label"]: c["id"] for c in classes}
    items = []
    for i, scene in enumerate(scenes):
        stem = f"scene_{i:03d}"
        scene.save(scene_dir / f"{stem}.json")
        img = scene.render()
        save_png(root / f"{stem}.png", np.asarray(img.pixels))
        gt = np.full((scene.height, scene.width), ignore_index, dtype=np.uint8)
        for label, m in scene.class_masks().items():
            gt[m.bits] = label_to_class[label]
        save_png(root / f"{stem}_gt.png", gt)
        items.append({"image": f"{stem}.png", "gt": f"{stem}_gt.png"})
    manifest = {
        "name": name,
        "tile_size": tile_size,
        "ignore_index": ignore_index,
        "classes": classes,
        "items": items,
    }
    (root / "manifest.json").write_text(json.dumps(manifest, indent=2))
    return root / "manifest.json", scene_dir


@pytest.fixture
def small_dataset(tmp_path):
    rng = np.random.default_rng(7)
    labels = ("building", "car", "tree")
    scenes = [generate_scene(rng, labels=labels) for _ in range(4)]
    classes = [{"id": i, "label": lbl, "synonyms": []} for i, lbl in enumerate(labels)]
    manifest, scene_dir = build_mock_dataset(tmp_path / "data", scenes, classes)
    return manifest, scene_dir, scenes
