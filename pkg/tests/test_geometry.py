import numpy as np
import pytest

from platelens.errors import AmbiguousInputError, InvalidGeometryError
from platelens.geometry import (
    BBox,
    as_polygon,
    polygon_area,
    polygon_bbox,
    rasterize_polygon,
    shoelace,
    trace_contour,
)
from platelens.morphology import fill_holes

from oracles import mask_iou_reference, rasterize_reference


def random_blob(rng, size=32, min_pixels=50):
    """Single-component random blob of at least min_pixels."""
    from platelens.morphology import connected_components, dilate

    while True:
        mask = np.zeros((size, size), dtype=bool)
        seeds = rng.integers(4, size - 4, size=(rng.integers(2, 5), 2))
        for y, x in seeds:
            mask[y, x] = True
        mask = dilate(mask, int(rng.integers(2, 5)))
        parts = connected_components(mask, 8)
        if parts and parts[0].sum() >= min_pixels:
            return parts[0]


class TestBBox:
    def test_area(self):
        assert BBox(1, 2, 4, 6).area == 12

    def test_degenerate_is_legal(self):
        assert BBox(3, 3, 3, 3).area == 0

    def test_inverted_rejected(self):
        with pytest.raises(InvalidGeometryError):
            BBox(5, 0, 1, 2)


class TestPolygon:
    def test_too_few_vertices(self):
        with pytest.raises(InvalidGeometryError):
            as_polygon([(0, 0), (1, 1)])

    def test_consecutive_duplicates(self):
        with pytest.raises(InvalidGeometryError):
            as_polygon([(0, 0), (0, 0), (1, 1), (2, 0)])

    def test_explicit_closure_dropped(self):
        poly = as_polygon([(0, 0), (4, 0), (4, 4), (0, 0)])
        assert len(poly) == 3

    def test_winding_canonical(self):
        a = as_polygon([(0, 0), (4, 0), (4, 4)])
        b = as_polygon([(4, 4), (4, 0), (0, 0)])
        assert shoelace(a) <= 0
        assert shoelace(b) <= 0
        assert polygon_area(a) == polygon_area(b) == 8

    def test_bbox(self):
        box = polygon_bbox(as_polygon([(1, 2), (5, 3), (2, 9)]))
        assert (box.x_min, box.y_min, box.x_max, box.y_max) == (1, 2, 5, 9)


class TestRasterize:
    def test_axis_aligned_square(self):
        mask = rasterize_polygon([(0, 0), (4, 0), (4, 4), (0, 4)], 8, 8)
        assert mask.sum() == 16
        assert mask[:4, :4].all()

    def test_full_canvas(self):
        mask = rasterize_polygon([(0, 0), (8, 0), (8, 8), (0, 8)], 8, 8)
        assert mask.sum() == 64

    def test_triangle_matches_center_scan(self):
        verts = [(0, 0), (6, 0), (0, 6)]
        mask = rasterize_polygon(verts, 8, 8)
        assert np.array_equal(mask, rasterize_reference(verts, 8, 8))

    def test_random_polygons_match_center_scan(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            n = int(rng.integers(3, 9))
            verts = rng.uniform(-2, 18, size=(n, 2))
            try:
                poly = as_polygon(verts)
            except InvalidGeometryError:
                continue
            mask = rasterize_polygon(poly, 16, 16)
            assert np.array_equal(mask, rasterize_reference(poly, 16, 16))

    def test_clipping(self):
        mask = rasterize_polygon([(-5, -5), (20, -5), (20, 20), (-5, 20)], 8, 8)
        assert mask.all()

    def test_degenerate_rejected(self):
        with pytest.raises(InvalidGeometryError):
            rasterize_polygon([(0, 0), (1, 1)], 8, 8)


class TestTraceContour:
    def test_solid_block(self):
        mask = np.zeros((8, 8), dtype=bool)
        mask[:4, :4] = True
        poly = trace_contour(mask)
        assert sorted(map(tuple, poly.tolist())) == [(0, 0), (0, 4), (4, 0), (4, 4)]

    def test_single_pixel(self):
        mask = np.zeros((5, 5), dtype=bool)
        mask[2, 3] = True
        poly = trace_contour(mask)
        assert sorted(map(tuple, poly.tolist())) == [(3, 2), (3, 3), (4, 2), (4, 3)]

    def test_diagonal_pair_single_loop(self):
        mask = np.zeros((4, 4), dtype=bool)
        mask[0, 0] = mask[1, 1] = True
        poly = trace_contour(mask)
        back = rasterize_polygon(poly, 4, 4)
        assert np.array_equal(back, mask)

    def test_empty_rejected(self):
        with pytest.raises(InvalidGeometryError):
            trace_contour(np.zeros((4, 4), dtype=bool))

    def test_multi_component_rejected(self):
        mask = np.zeros((8, 8), dtype=bool)
        mask[0, 0] = mask[5, 5] = True
        with pytest.raises(AmbiguousInputError):
            trace_contour(mask)

    def test_round_trip_random_blobs(self):
        rng = np.random.default_rng(11)
        for _ in range(40):
            blob = random_blob(rng)
            filled = fill_holes(blob)
            back = rasterize_polygon(trace_contour(blob), *blob.shape[::-1])
            assert mask_iou_reference(filled, back) >= 0.99

    def test_round_trip_is_exact_for_filled(self):
        rng = np.random.default_rng(13)
        blob = fill_holes(random_blob(rng))
        back = rasterize_polygon(trace_contour(blob), *blob.shape[::-1])
        assert np.array_equal(back, blob)
