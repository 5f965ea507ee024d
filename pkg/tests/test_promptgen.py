import itertools

import numpy as np
import pytest

from text2seg.core import BBox, ImageRaster, SimilarityMap
from text2seg.mock import MockBackend, MockScene, Shape
from text2seg.promptgen import (
    ClassSpec,
    PointSamplingConfig,
    generate_box_prompts,
    grid_points,
    merged_similarity_points,
    sample_point_prompts,
)


def scene_with(shapes):
    return MockScene(64, 48, tuple(shapes))


@pytest.fixture
def plant_backend():
    scene = scene_with(
        [
            Shape("rect", (2, 2, 12, 10), "tree", {"tree": 0.9}),
            Shape("rect", (20, 20, 40, 30), "grass", {"grass": 0.8}),
        ]
    )
    return MockBackend(scene), scene.render()


class TestClassSpec:
    def test_label_required(self):
        with pytest.raises(ValueError):
            ClassSpec(0, "")

    def test_synonym_cap(self):
        with pytest.raises(ValueError):
            ClassSpec(0, "x", tuple(f"s{i}" for i in range(11)))

    def test_phrases_fall_back_to_label(self):
        assert ClassSpec(0, "car").phrases == ("car",)
        assert ClassSpec(0, "car", ("auto", "car")).phrases == ("auto", "car")


class TestGenerateBoxPrompts:
    def test_single_match(self):
        scene = scene_with([Shape("rect", (4, 4, 20, 16), "building", {"building": 1.0})])
        backend = MockBackend(scene)
        boxes = generate_box_prompts(backend, scene.render(), ClassSpec(0, "building"))
        assert len(boxes) == 1
        assert (boxes[0].x0, boxes[0].y0, boxes[0].x1, boxes[0].y1) == (4, 4, 20, 16)
        assert boxes[0].score == 1.0

    def test_synonyms_merge_across_objects(self, plant_backend):
        backend, image = plant_backend
        spec = ClassSpec(0, "plant", ("tree", "grass", "plant"))
        boxes = generate_box_prompts(backend, image, spec)
        assert len(boxes) == 2

    def test_empty_scene(self):
        scene = scene_with([])
        backend = MockBackend(scene)
        assert generate_box_prompts(backend, scene.render(), ClassSpec(0, "car")) == []

    def test_score_filter(self, plant_backend):
        backend, image = plant_backend
        spec = ClassSpec(0, "plant", ("tree", "grass"))
        boxes = generate_box_prompts(backend, image, spec, box_threshold=0.85)
        assert [b.phrase for b in boxes] == ["tree"]

    def test_duplicates_collapse_to_higher_score(self):
        scene = scene_with(
            [Shape("rect", (4, 4, 20, 16), "building", {"building": 0.9, "house": 0.6})]
        )
        backend = MockBackend(scene)
        spec = ClassSpec(0, "building", ("house", "building"))
        boxes = generate_box_prompts(backend, scene.render(), spec)
        assert len(boxes) == 1
        assert boxes[0].score == 0.9

    def test_synonym_permutation_invariance(self, plant_backend):
        backend, image = plant_backend
        results = set()
        for perm in itertools.permutations(("tree", "grass")):
            boxes = generate_box_prompts(backend, image, ClassSpec(0, "plant", perm))
            results.add(frozenset((b.x0, b.y0, b.x1, b.y1, b.score) for b in boxes))
        assert len(results) == 1

    def test_adding_synonym_is_monotone(self, plant_backend):
        backend, image = plant_backend
        before = generate_box_prompts(backend, image, ClassSpec(0, "plant", ("tree",)))
        after = generate_box_prompts(backend, image, ClassSpec(0, "plant", ("tree", "grass")))
        coords = {(b.x0, b.y0, b.x1, b.y1) for b in after}
        assert all((b.x0, b.y0, b.x1, b.y1) in coords for b in before)


class TestSamplePointPrompts:
    def test_all_zero(self):
        s = SimilarityMap(np.zeros((4, 4)))
        assert sample_point_prompts(s, PointSamplingConfig(0.5, 3)) == []

    def test_unique_max(self):
        v = np.zeros((3, 4))
        v[1, 2] = 1.0
        pts = sample_point_prompts(SimilarityMap(v), PointSamplingConfig(0.0, 1))
        assert [(p.x, p.y) for p in pts] == [(2, 1)]

    def test_descending_order(self):
        s = SimilarityMap(np.asarray([[0.1, 0.9], [0.8, 0.2]]))
        pts = sample_point_prompts(s, PointSamplingConfig(0.5, 2))
        assert [(p.x, p.y) for p in pts] == [(1, 0), (0, 1)]

    def test_k_limit_threshold_and_order(self):
        rng = np.random.default_rng(3)
        s = SimilarityMap(rng.random((8, 8)))
        cfg = PointSamplingConfig(0.4, 5)
        pts = sample_point_prompts(s, cfg)
        assert len(pts) <= cfg.max_points
        values = [s.values[p.y, p.x] for p in pts]
        assert all(v >= cfg.threshold for v in values)
        assert values == sorted(values, reverse=True)

    def test_row_major_tie_break(self):
        v = np.zeros((2, 2))
        v[0, 1] = v[1, 0] = 1.0
        pts = sample_point_prompts(SimilarityMap(v), PointSamplingConfig(0.5, 2))
        assert [(p.x, p.y) for p in pts] == [(1, 0), (0, 1)]


class TestMergedSimilarityPoints:
    def test_single_synonym_equals_plain_sampling(self, plant_backend):
        backend, image = plant_backend
        cfg = PointSamplingConfig(0.5, 4)
        spec = ClassSpec(0, "tree", ("tree",))
        merged = merged_similarity_points(backend, image, spec, cfg)
        from text2seg.core import normalize_similarity_map

        direct = sample_point_prompts(
            normalize_similarity_map(backend.similarity_map(image, "tree")), cfg
        )
        assert [(p.x, p.y) for p in merged] == [(p.x, p.y) for p in direct]

    def test_same_point_dedups(self, plant_backend):
        backend, image = plant_backend
        # both phrases light up the same shape, so top points coincide
        scene = scene_with([Shape("rect", (2, 2, 10, 10), "tree", {"tree": 1.0, "plant": 1.0})])
        be = MockBackend(scene)
        cfg = PointSamplingConfig(0.5, 3)
        merged = merged_similarity_points(be, scene.render(), ClassSpec(0, "tree", ("tree", "plant")), cfg)
        assert len(merged) == len({(p.x, p.y) for p in merged}) == 3

    def test_disjoint_points_union(self, plant_backend):
        backend, image = plant_backend
        cfg = PointSamplingConfig(0.5, 2)
        spec = ClassSpec(0, "plant", ("tree", "grass"))
        merged = merged_similarity_points(backend, image, spec, cfg)
        tree_only = merged_similarity_points(backend, image, ClassSpec(0, "p", ("tree",)), cfg)
        grass_only = merged_similarity_points(backend, image, ClassSpec(0, "p", ("grass",)), cfg)
        assert {(p.x, p.y) for p in merged} == {
            (p.x, p.y) for p in tree_only + grass_only
        }

    def test_in_bounds(self, plant_backend):
        backend, image = plant_backend
        spec = ClassSpec(0, "plant", ("tree", "grass"))
        for p in merged_similarity_points(backend, image, spec, PointSamplingConfig(0.1, 50)):
            assert 0 <= p.x < image.width and 0 <= p.y < image.height


class TestGridPoints:
    def test_center_of_single_cell(self):
        pts = grid_points(100, 100, 1)
        assert [(p.x, p.y) for p in pts] == [(50, 50)]

    def test_two_by_two(self):
        pts = grid_points(4, 4, 2)
        assert [(p.x, p.y) for p in pts] == [(1, 1), (3, 1), (1, 3), (3, 3)]

    def test_count_and_bounds(self):
        pts = grid_points(17, 11, 3)
        assert len(pts) == 9
        assert all(0 <= p.x < 17 and 0 <= p.y < 11 for p in pts)

    def test_invalid_n(self):
        with pytest.raises(ValueError):
            grid_points(4, 4, 0)
