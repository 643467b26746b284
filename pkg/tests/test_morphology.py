import numpy as np
import pytest

from platelens.errors import InvalidInputError
from platelens.morphology import connected_components, dilate, erode, fill_holes

from oracles import (
    dilate_reference,
    erode_reference,
    fill_holes_reference,
    label_components_reference,
)


def random_masks(seed, count, shape=(16, 16), density=0.3):
    rng = np.random.default_rng(seed)
    return [rng.random(shape) < density for _ in range(count)]


class TestDilate:
    def test_single_pixel_radius_1(self):
        mask = np.zeros((9, 9), dtype=bool)
        mask[4, 4] = True
        out = dilate(mask, 1)
        assert out.sum() == 9
        assert out[3:6, 3:6].all()

    def test_radius_zero_identity(self):
        for mask in random_masks(1, 5):
            assert np.array_equal(dilate(mask, 0), mask)

    def test_matches_brute_force(self):
        for mask in random_masks(2, 8):
            assert np.array_equal(dilate(mask, 2), dilate_reference(mask, 2))

    def test_negative_radius_rejected(self):
        with pytest.raises(InvalidInputError):
            dilate(np.zeros((4, 4), dtype=bool), -1)

    def test_extensive_and_monotone(self):
        for mask in random_masks(3, 5):
            grown = dilate(mask, 1)
            assert (mask <= grown).all()
            bigger = mask | random_masks(4, 1)[0]
            assert (grown <= dilate(bigger, 1)).all()

    def test_union_distributivity(self):
        a, b = random_masks(5, 2)
        assert np.array_equal(dilate(a | b, 2), dilate(a, 2) | dilate(b, 2))


class TestErode:
    def test_block_to_center(self):
        mask = np.zeros((5, 5), dtype=bool)
        mask[1:4, 1:4] = True
        out = erode(mask, 1)
        assert out.sum() == 1 and out[2, 2]

    def test_full_canvas_strips_border(self):
        mask = np.ones((6, 8), dtype=bool)
        out = erode(mask, 1)
        expected = np.zeros_like(mask)
        expected[1:-1, 1:-1] = True
        assert np.array_equal(out, expected)

    def test_matches_brute_force(self):
        for mask in random_masks(6, 8, density=0.7):
            assert np.array_equal(erode(mask, 1), erode_reference(mask, 1))

    def test_duality_with_dilation(self):
        # the complement lives in the padded plane: off-canvas is unset in the
        # mask, hence set in its complement
        for mask in random_masks(7, 8, density=0.6):
            radius = 2
            padded = np.pad(mask, radius, constant_values=False)
            dual = ~dilate(~padded, radius)[radius:-radius, radius:-radius]
            assert np.array_equal(erode(mask, radius), dual)


class TestFillHoles:
    def test_ring_becomes_block(self):
        mask = np.zeros((7, 7), dtype=bool)
        mask[1:6, 1:6] = True
        mask[2:5, 2:5] = False
        assert fill_holes(mask)[1:6, 1:6].all()

    def test_no_holes_unchanged(self):
        for mask in random_masks(8, 5, density=0.15):
            filled = fill_holes_reference(mask)
            if np.array_equal(filled, mask):
                assert np.array_equal(fill_holes(mask), mask)

    def test_matches_flood_fill(self):
        for mask in random_masks(9, 10, density=0.45):
            assert np.array_equal(fill_holes(mask), fill_holes_reference(mask))

    def test_diagonal_gap_is_a_wall(self):
        # background connected only diagonally does not leak through
        mask = np.array(
            [
                [1, 1, 1, 1],
                [1, 0, 1, 1],
                [1, 1, 0, 1],
                [1, 1, 1, 0],
            ],
            dtype=bool,
        )
        out = fill_holes(mask)
        assert out[1, 1] and out[2, 2] and not out[3, 3]


class TestConnectedComponents:
    def test_two_blocks(self):
        mask = np.zeros((8, 8), dtype=bool)
        mask[0:2, 0:2] = True
        mask[5:7, 5:7] = True
        parts = connected_components(mask, 4)
        assert len(parts) == 2
        assert all(p.sum() == 4 for p in parts)

    def test_diagonal_touch(self):
        mask = np.zeros((4, 4), dtype=bool)
        mask[1, 1] = mask[2, 2] = True
        assert len(connected_components(mask, 8)) == 1
        assert len(connected_components(mask, 4)) == 2

    def test_empty(self):
        assert connected_components(np.zeros((4, 4), dtype=bool), 8) == []

    def test_partition_and_order(self):
        for mask in random_masks(10, 6, shape=(32, 32), density=0.35):
            for connectivity in (4, 8):
                parts = connected_components(mask, connectivity)
                union = np.zeros_like(mask)
                sizes = []
                for part in parts:
                    assert not (union & part).any(), "components overlap"
                    union |= part
                    sizes.append(int(part.sum()))
                assert np.array_equal(union, mask)
                assert sizes == sorted(sizes, reverse=True)

    def test_matches_union_find(self):
        for mask in random_masks(11, 5, shape=(32, 32), density=0.3):
            for connectivity in (4, 8):
                parts = connected_components(mask, connectivity)
                expected = label_components_reference(mask, connectivity)
                got = {frozenset(zip(*np.nonzero(p))) for p in parts}
                assert got == {frozenset(c) for c in expected}

    def test_tie_order_topmost_leftmost(self):
        mask = np.zeros((6, 6), dtype=bool)
        mask[4, 1] = True  # same size, later in scan order
        mask[1, 3] = True
        parts = connected_components(mask, 4)
        assert parts[0][1, 3] and parts[1][4, 1]

    def test_bad_connectivity(self):
        with pytest.raises(InvalidInputError):
            connected_components(np.zeros((2, 2), dtype=bool), 6)
