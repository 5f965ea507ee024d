"""Tour of the mock oracle: build a scene, query every backend capability.

The mock backend answers from a known scene description, so every output
here is exactly predictable — that is what makes the rest of the pipeline
testable without real models.
"""
import numpy as np

from text2seg.mock import MockBackend, MockScene, Shape

scene = MockScene(
    96,
    64,
    (
        Shape("rect", (8, 8, 40, 30), "building", {"building": 0.9, "house": 0.6}),
        Shape("circle", (64, 40, 10), "car", {"car": 1.0}),
    ),
)
backend = MockBackend(scene)
image = scene.render()
print(f"scene {image.width}x{image.height}, shapes: "
      + ", ".join(s.label for s in scene.shapes))

# open-set detection: each phrase is matched against shape score tables
boxes = backend.detect_boxes(image, ["building", "car", "tree"], 0.35, 0.25)
for b in boxes:
    print(f"detect  {b.phrase!r:12} box=({b.x0},{b.y0},{b.x1},{b.y1}) score={b.score}")

# similarity map: per-pixel response, min-max normalized downstream
smap = backend.similarity_map(image, "car")
ys, xs = np.nonzero(smap.values == smap.values.max())
print(f"similarity 'car' peaks at ({xs[0]},{ys[0]}), max={smap.values.max()}")

# promptable segmentation: a point lands in the smallest containing shape
from text2seg.core import PointPrompt

instances = backend.segment_prompts(image, [PointPrompt(20, 20)], [])
print(f"point (20,20) -> {len(instances)} instance, "
      f"{int(instances[0].mask.bits.sum())} px")

# automatic gallery: every shape proposed once
auto = backend.segment_auto(image, grid_n=8)
print(f"segment_auto -> {len(auto)} candidates")

# embeddings: one-hot text space, image crops recover class ownership
vecs = backend.embed_texts(["building", "car"])
print(f"embed_texts: dim={len(vecs[0])}, building.car={np.dot(vecs[0], vecs[1])}")
