import itertools

import numpy as np
import pytest

from platelens.errors import InvalidGeometryError, InvalidInputError
from platelens.raster import crop_with_alpha, flip, load_image, save_png, to_rgb


def checker(h, w):
    img = np.zeros((h, w, 3), dtype=np.uint8)
    img[:, :, 0] = np.arange(w, dtype=np.uint8)[None, :] * 7
    img[:, :, 1] = np.arange(h, dtype=np.uint8)[:, None] * 11
    img[:, :, 2] = 63
    return img


class TestFlip:
    def test_identity(self):
        img = checker(5, 7)
        assert np.array_equal(flip(img, False, False), img)

    def test_involution(self):
        img = checker(6, 4)
        for v, h in itertools.product((False, True), repeat=2):
            assert np.array_equal(flip(flip(img, v, h), v, h), img)

    def test_vertical_reverses_rows(self):
        img = checker(3, 2)
        out = flip(img, vertical=True)
        for y in range(3):
            assert np.array_equal(out[y], img[2 - y])

    def test_group_is_klein_four(self):
        img = checker(5, 5)
        configs = list(itertools.product((False, True), repeat=2))
        for (v1, h1), (v2, h2) in itertools.product(configs, repeat=2):
            composed = flip(flip(img, v1, h1), v2, h2)
            direct = flip(img, v1 ^ v2, h1 ^ h2)
            assert np.array_equal(composed, direct)

    def test_mask_flip(self):
        mask = np.zeros((4, 4), dtype=bool)
        mask[0, 1] = True
        assert flip(mask, vertical=True)[3, 1]


class TestCropWithAlpha:
    def test_full_mask_keeps_size(self):
        page = checker(10, 12)
        mask = np.ones((10, 12), dtype=bool)
        card = crop_with_alpha(page, mask, 0)
        assert card.shape == (10, 12, 4)
        assert (card[:, :, 3] == 255).all()

    def test_padding_bound(self):
        page = checker(100, 100)
        mask = np.zeros((100, 100), dtype=bool)
        mask[40:50, 40:50] = True
        card = crop_with_alpha(page, mask, 2)
        assert card.shape[0] <= 14 and card.shape[1] <= 14

    def test_opaque_count_equals_mask(self):
        rng = np.random.default_rng(3)
        page = checker(40, 40)
        for _ in range(10):
            mask = rng.random((40, 40)) < 0.2
            if not mask.any():
                continue
            card = crop_with_alpha(page, mask, int(rng.integers(0, 4)))
            assert int((card[:, :, 3] == 255).sum()) == int(mask.sum())

    def test_rgb_copied(self):
        page = checker(8, 8)
        mask = np.zeros((8, 8), dtype=bool)
        mask[2, 3] = True
        card = crop_with_alpha(page, mask, 0)
        assert np.array_equal(card[0, 0, :3], page[2, 3])

    def test_empty_mask_rejected(self):
        with pytest.raises(InvalidGeometryError):
            crop_with_alpha(checker(4, 4), np.zeros((4, 4), dtype=bool), 0)

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidInputError):
            crop_with_alpha(checker(4, 4), np.zeros((5, 5), dtype=bool), 0)


class TestIO:
    def test_png_round_trip(self, tmp_path):
        img = checker(9, 5)
        path = tmp_path / "a.png"
        save_png(img, path)
        assert np.array_equal(load_image(path), img)

    def test_rgba_round_trip(self, tmp_path):
        img = np.dstack([checker(6, 6), np.full((6, 6), 128, np.uint8)])
        path = tmp_path / "b.png"
        save_png(img, path)
        assert np.array_equal(load_image(path), img)

    def test_to_rgb_from_gray(self):
        gray = np.arange(12, dtype=np.uint8).reshape(3, 4)
        rgb = to_rgb(gray)
        assert rgb.shape == (3, 4, 3)
        assert np.array_equal(rgb[:, :, 0], gray)
