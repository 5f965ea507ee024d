import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from text2seg.core import BinaryMask, ImageRaster
from text2seg.dataset import (
    DatasetManifest,
    GroundTruthError,
    ManifestError,
    TileGrid,
    decode_gt,
    load_manifest,
    stitch,
    tile_image,
    tile_mask,
)
from text2seg.metrics import confusion_counts
from text2seg.promptgen import ClassSpec

from conftest import mask


def manifest_with(palette=None, ignore=255):
    return DatasetManifest(
        name="t",
        tile_size=64,
        ignore_index=ignore,
        classes=(ClassSpec(0, "a"), ClassSpec(1, "b")),
        items=(),
        palette=palette,
    )


class TestTileImage:
    def _img(self, w, h):
        rng = np.random.default_rng(w * 31 + h)
        return ImageRaster(rng.integers(0, 255, size=(h, w, 3), dtype=np.uint8))

    def test_exact_multiple(self):
        grid, tiles = tile_image(self._img(2048, 2048), 1024)
        assert (grid.columns, grid.rows) == (2, 2)
        assert len(tiles) == 4

    def test_single_tile_identity(self):
        img = self._img(1024, 1024)
        grid, tiles = tile_image(img, 1024)
        assert len(tiles) == 1
        assert np.array_equal(tiles[0].pixels, img.pixels)

    def test_uavid_frame_geometry(self):
        grid, tiles = tile_image(self._img(3840, 2160), 1024)
        assert (grid.columns, grid.rows) == (4, 3)
        assert len(tiles) == 12
        assert grid.padded_width - grid.width == 256
        assert grid.padded_height - grid.height == 912

    def test_padding_is_pad_color(self):
        img = ImageRaster(np.full((3, 3, 3), 200, dtype=np.uint8))
        _, tiles = tile_image(img, 4, pad_rgb=(1, 2, 3))
        assert tuple(tiles[0].pixels[3, 0]) == (1, 2, 3)
        assert tuple(tiles[0].pixels[0, 3]) == (1, 2, 3)


class TestStitch:
    def test_single_tile_crops_to_original(self):
        m = BinaryMask(np.ones((3, 5), dtype=bool))
        grid, tiles = tile_mask(m, 8)
        out = stitch(grid, tiles)
        assert out == m

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 40), st.integers(1, 40), st.integers(1, 16), st.integers(0, 2**31))
    def test_round_trip(self, w, h, tile, seed):
        rng = np.random.default_rng(seed)
        m = BinaryMask(rng.random((h, w)) < 0.5)
        grid, tiles = tile_mask(m, tile)
        assert stitch(grid, tiles) == m

    def test_all_one_tiles_on_padded_frame(self):
        grid = TileGrid(5, 3, 4)
        tiles = [BinaryMask(np.ones((4, 4), dtype=bool)) for _ in range(grid.columns * grid.rows)]
        out = stitch(grid, tiles)
        assert out.width == 5 and out.height == 3
        assert out.bits.all()

    def test_count_mismatch_rejected(self):
        with pytest.raises(ValueError):
            stitch(TileGrid(8, 8, 4), [BinaryMask.zeros(4, 4)])

    def test_size_mismatch_rejected(self):
        with pytest.raises(ValueError):
            stitch(TileGrid(4, 4, 4), [BinaryMask.zeros(2, 2)])

    def test_padded_pixels_never_reach_confusion(self):
        # predictions in the padded margin vanish after stitching
        gt = BinaryMask(np.zeros((3, 5), dtype=bool))
        grid = TileGrid(5, 3, 4)
        padded_ones = [BinaryMask(np.ones((4, 4), dtype=bool)) for _ in range(2)]
        pred_full = stitch(grid, padded_ones)
        c = confusion_counts(pred_full, gt)
        assert c.total == 15  # only original pixels counted
        assert c.fp == 15


class TestDecodeGt:
    def test_single_class_image(self):
        m = manifest_with()
        masks, ignore = decode_gt(np.zeros((2, 2), dtype=np.uint8), m)
        assert masks[0].bits.all()
        assert masks[1].is_empty and ignore.is_empty

    def test_indexed_with_ignore(self):
        m = manifest_with()
        arr = np.asarray([[0, 1], [1, 255]], dtype=np.uint8)
        masks, ignore = decode_gt(arr, m)
        assert masks[0].count == 1
        assert masks[1].count == 2
        assert ignore.count == 1

    def test_rgb_palette(self):
        m = manifest_with(palette={(255, 0, 0): 0, (0, 0, 255): 1})
        arr = np.zeros((2, 2, 3), dtype=np.uint8)
        arr[0, :, 0] = 255
        arr[1, :, 2] = 255
        masks, ignore = decode_gt(arr, m)
        assert masks[0].count == 2 and masks[1].count == 2
        assert ignore.is_empty
        union = masks[0].bits | masks[1].bits
        assert union.all()
        assert not (masks[0].bits & masks[1].bits).any()

    def test_unknown_index_names_location(self):
        with pytest.raises(GroundTruthError, match=r"index 9 at \(1,0\)"):
            decode_gt(np.asarray([[0, 9], [1, 1]], dtype=np.uint8), manifest_with())

    def test_unknown_color_names_location(self):
        m = manifest_with(palette={(255, 0, 0): 0, (0, 0, 255): 1})
        arr = np.zeros((1, 2, 3), dtype=np.uint8)
        arr[0, 0, 0] = 255
        with pytest.raises(GroundTruthError, match=r"\(0, 0, 0\) at \(1,0\)"):
            decode_gt(arr, m)

    def test_partition_property(self):
        m = manifest_with()
        rng = np.random.default_rng(5)
        arr = rng.choice([0, 1, 255], size=(16, 16)).astype(np.uint8)
        masks, ignore = decode_gt(arr, m)
        layers = [masks[0].bits, masks[1].bits, ignore.bits]
        stacked = np.stack(layers).astype(int).sum(axis=0)
        assert (stacked == 1).all()


class TestManifest:
    def test_load(self, tmp_path):
        (tmp_path / "m.json").write_text(
            json.dumps(
                {
                    "name": "d",
                    "tile_size": 32,
                    "ignore_index": 255,
                    "classes": [
                        {"id": 0, "label": "building", "synonyms": ["building", "house"]},
                        {"id": 1, "label": "car"},
                    ],
                    "palette": {"255,0,0": 0, "0,255,0": 1},
                    "items": [{"image": "x.png", "gt": "y.png"}, {"image": "z.png"}],
                }
            )
        )
        m = load_manifest(tmp_path / "m.json")
        assert m.name == "d"
        assert m.classes[0].synonyms == ("building", "house")
        assert m.palette[(255, 0, 0)] == 0
        assert m.items[0].gt is not None and m.items[1].gt is None
        assert m.items[0].image == tmp_path / "x.png"

    def test_non_dense_ids_rejected(self):
        with pytest.raises(ManifestError):
            DatasetManifest("x", 32, 255, (ClassSpec(1, "a"),), ())

    def test_bad_tile_size_rejected(self):
        with pytest.raises(ManifestError):
            DatasetManifest("x", 0, 255, (ClassSpec(0, "a"),), ())
