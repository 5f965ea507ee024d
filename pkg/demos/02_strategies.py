"""Run all five prompting strategies on one mock scene and compare masks.

Shows the composition laws directly: s4 is the union of s1 and s2, and s5
is s4 after the embedding filter (so s5 is always contained in s4).
"""
import json

import numpy as np

from text2seg.core import mask_iou, mask_union
from text2seg.mock import MockBackend, generate_scene
from text2seg.promptgen import ClassSpec
from text2seg.strategies import StrategyId, run_strategy

rng = np.random.default_rng(42)
scene = generate_scene(rng, labels=("building", "car", "tree"))
backend = MockBackend(scene)
image = scene.render()
gt = scene.class_masks()["building"]
spec = ClassSpec(0, "building")

traces = {}
for strategy in StrategyId:
    trace = run_strategy(backend, image, spec, strategy)
    traces[strategy.value] = trace
    print(f"{strategy.value}: {int(trace.final.bits.sum()):5d} px, "
          f"IoU vs gt = {mask_iou(trace.final, gt):.3f}")

s1, s2, s4, s5 = (traces[k].final for k in ("s1", "s2", "s4", "s5"))
print("s4 == s1 | s2:", s4 == mask_union(s1, s2))
print("s5 <= s4:     ", not (s5.bits & ~s4.bits).any())

# every run carries a JSON-serializable trace: prompts, maps, verdicts, mask
obj = traces["s5"].to_json()
print("s5 trace keys:", sorted(obj))
print("s5 gallery verdicts:", json.dumps(
    [{k: e[k] for k in ("confidence", "selected", "score", "note")}
     for e in obj["gallery"][:3]], indent=2))
