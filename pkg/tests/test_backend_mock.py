import numpy as np
import pytest

from text2seg.backends import BackendError, dedup_instances
from text2seg.core import BBox, BinaryMask, ImageRaster, InstanceMask, PointPrompt, crop_to_bbox
from text2seg.mock import (
    MockBackend,
    MockDirectoryBackend,
    MockScene,
    Shape,
    generate_scene,
    label_color,
)


@pytest.fixture
def scene():
    return MockScene(
        48,
        32,
        (
            Shape("rect", (4, 4, 20, 16), "building", {"building": 0.9, "house": 0.6}),
            Shape("circle", (34, 20, 6), "car", {"car": 1.0}),
        ),
    )


@pytest.fixture
def backend(scene):
    return MockBackend(scene)


@pytest.fixture
def image(scene):
    return scene.render()


class TestDetect:
    def test_phrase_match_returns_tight_box(self, backend, image):
        boxes = backend.detect_boxes(image, ["building"], 0.0, 0.0)
        assert len(boxes) == 1
        b = boxes[0]
        assert (b.x0, b.y0, b.x1, b.y1) == (4, 4, 20, 16)
        assert b.score == 0.9

    def test_no_match(self, backend, image):
        assert backend.detect_boxes(image, ["river"], 0.0, 0.0) == []

    def test_two_phrases_same_shape_duplicate(self, backend, image):
        boxes = backend.detect_boxes(image, ["building", "house"], 0.0, 0.0)
        assert len(boxes) == 2
        assert {b.phrase for b in boxes} == {"building", "house"}

    def test_text_threshold_filters(self, backend, image):
        boxes = backend.detect_boxes(image, ["house"], 0.0, 0.7)
        assert boxes == []


class TestSimilarity:
    def test_no_match_is_zero(self, backend, image):
        assert not backend.similarity_map(image, "river").values.any()

    def test_rect_with_unit_score_is_binary(self, backend, image):
        smap = backend.similarity_map(image, "car")
        car_mask = backend.scene.shape_masks()[1]
        assert np.array_equal(smap.values > 0, car_mask.bits)
        assert smap.values.max() == 1.0

    def test_overlapping_shapes_take_max(self):
        scene = MockScene(
            20,
            20,
            (
                Shape("rect", (0, 0, 10, 10), "a", {"x": 0.5}),
                Shape("rect", (5, 5, 15, 15), "b", {"x": 0.8}),
            ),
        )
        smap = MockBackend(scene).similarity_map(scene.render(), "x")
        assert smap.values[7, 7] == 0.8
        assert smap.values[2, 2] == 0.5


class TestSegmentPrompts:
    def test_point_inside_circle(self, backend, image, scene):
        out = backend.segment_prompts(image, [PointPrompt(34, 20)], [])
        assert len(out) == 1
        assert out[0].mask == scene.shape_masks()[1]

    def test_point_on_background(self, backend, image):
        assert backend.segment_prompts(image, [PointPrompt(0, 0)], []) == []

    def test_box_equal_to_rect(self, backend, image, scene):
        out = backend.segment_prompts(image, [], [BBox(4, 4, 20, 16)])
        assert len(out) == 1
        assert out[0].mask == scene.shape_masks()[0]

    def test_no_prompts_rejected(self, backend, image):
        with pytest.raises(BackendError):
            backend.segment_prompts(image, [], [])

    def test_smallest_containing_shape_wins(self):
        scene = MockScene(
            30,
            30,
            (
                Shape("rect", (0, 0, 30, 30), "big", {}),
                Shape("rect", (10, 10, 15, 15), "small", {}),
            ),
        )
        be = MockBackend(scene)
        out = be.segment_prompts(scene.render(), [PointPrompt(12, 12)], [])
        assert out[0].mask == scene.shape_masks()[1]


class TestSegmentAuto:
    def test_every_shape_once(self, backend, image):
        assert len(backend.segment_auto(image, 4)) == 2
        assert len(backend.segment_auto(image, 32)) == 2

    def test_empty_scene(self):
        scene = MockScene(8, 8, ())
        assert MockBackend(scene).segment_auto(scene.render(), 4) == []

    def test_dedup_rule(self):
        m = BinaryMask(np.ones((4, 4), dtype=bool))
        survivors = dedup_instances([InstanceMask(m, 0.5), InstanceMask(m, 0.9)])
        assert len(survivors) == 1
        assert survivors[0].confidence == 0.9


class TestEmbeddings:
    def test_one_hot_alignment(self, backend, image, scene):
        car_mask = scene.shape_masks()[1]
        crop = crop_to_bbox(image, car_mask)
        e_img = backend.embed_image(crop)
        (e_car,) = backend.embed_texts(["car"])
        assert float(np.dot(e_car, e_img)) == pytest.approx(1.0)

    def test_orthogonal_classes(self, backend, image, scene):
        crop = crop_to_bbox(image, scene.shape_masks()[0])
        e_img = backend.embed_image(crop)
        (e_car,) = backend.embed_texts(["car"])
        assert float(np.dot(e_car, e_img)) == pytest.approx(0.0)

    def test_unit_norm(self, backend, image, scene):
        for vec in backend.embed_texts(["car", "building", "background"]):
            assert np.linalg.norm(vec) == pytest.approx(1.0, abs=1e-6)
        crop = crop_to_bbox(image, scene.shape_masks()[0])
        assert np.linalg.norm(backend.embed_image(crop)) == pytest.approx(1.0, abs=1e-6)


class TestDeterminismAndRouting:
    def test_pure_function_of_scene_and_request(self, scene):
        img = scene.render()
        a = MockBackend(scene)
        b = MockBackend(scene)
        boxes_a = a.detect_boxes(img, ["building"], 0.0, 0.0)
        boxes_b = b.detect_boxes(img, ["building"], 0.0, 0.0)
        assert boxes_a == boxes_b
        assert np.array_equal(
            a.similarity_map(img, "car").values, b.similarity_map(img, "car").values
        )

    def test_wrong_image_rejected(self, backend):
        other = ImageRaster(np.zeros((32, 48, 3), dtype=np.uint8))
        with pytest.raises(BackendError):
            backend.detect_boxes(other, ["car"], 0.0, 0.0)

    def test_directory_backend_routes_by_content(self, tmp_path):
        rng = np.random.default_rng(1)
        s1 = generate_scene(rng, labels=("building",))
        s2 = generate_scene(rng, labels=("car",))
        s1.save(tmp_path / "a.json")
        s2.save(tmp_path / "b.json")
        be = MockDirectoryBackend(tmp_path)
        assert len(be.detect_boxes(s1.render(), ["building"], 0.0, 0.0)) == 1
        assert be.detect_boxes(s2.render(), ["building"], 0.0, 0.0) == []

    def test_directory_backend_accepts_padded_image(self, tmp_path):
        rng = np.random.default_rng(2)
        s = generate_scene(rng, labels=("car",))
        s.save(tmp_path / "s.json")
        be = MockDirectoryBackend(tmp_path)
        padded = np.zeros((s.height + 10, s.width + 6, 3), dtype=np.uint8)
        padded[: s.height, : s.width] = s.render().pixels
        boxes = be.detect_boxes(ImageRaster(padded), ["car"], 0.0, 0.0)
        assert len(boxes) == 1

    def test_directory_backend_unknown_image(self, tmp_path):
        rng = np.random.default_rng(3)
        generate_scene(rng, labels=("car",)).save(tmp_path / "s.json")
        be = MockDirectoryBackend(tmp_path)
        with pytest.raises(BackendError):
            be.similarity_map(ImageRaster(np.full((8, 8, 3), 9, dtype=np.uint8)), "car")


def test_label_color_never_black_and_stable():
    for label in ["car", "building", "tree", "a", "zz"]:
        c = label_color(label)
        assert max(c) >= 32
        assert c == label_color(label)


def test_scene_json_round_trip(scene, tmp_path):
    scene.save(tmp_path / "scene.json")
    loaded = MockScene.load(tmp_path / "scene.json")
    assert loaded == scene
