import numpy as np
import pytest

from platelens.errors import InvalidInputError, PackError
from platelens.packing import PackItem, PackedLayout, PageSpec, pack

from oracles import optimal_page_count


SPEC = PageSpec(page_width=210, page_height=297, margin=15, gutter=5, caption_height=6)


def random_items(rng, n, spec=SPEC):
    items = []
    for i in range(n):
        w = float(rng.uniform(15, spec.printable_width))
        h = float(rng.uniform(15, spec.printable_height - spec.caption_height))
        items.append(PackItem(card_id=f"card{i:03d}", width=w, height=h))
    return items


def boxes_of(layout, spec):
    return [
        (p.page_index, p.x, p.y, p.x + p.width, p.y + p.height)
        for p in layout.placements
    ]


def assert_layout_valid(layout: PackedLayout, items, spec=SPEC):
    assert sorted(p.card_id for p in layout.placements) == sorted(i.card_id for i in items)
    for page, x0, y0, x1, y1 in boxes_of(layout, spec):
        assert 0 <= page < layout.page_count
        assert x0 >= spec.margin - 1e-9
        assert y0 >= spec.margin - 1e-9
        assert x1 <= spec.page_width - spec.margin + 1e-9
        assert y1 <= spec.page_height - spec.margin + 1e-9
    rects = boxes_of(layout, spec)
    for i in range(len(rects)):
        for j in range(i + 1, len(rects)):
            a, b = rects[i], rects[j]
            if a[0] != b[0]:
                continue
            disjoint = (
                a[3] <= b[1] + 1e-9
                or b[3] <= a[1] + 1e-9
                or a[4] <= b[2] + 1e-9
                or b[4] <= a[2] + 1e-9
            )
            assert disjoint, f"overlap between {a} and {b}"


class TestPack:
    def test_single_item_at_margin(self):
        layout = pack([PackItem("only", 50, 60)], SPEC)
        assert layout.page_count == 1
        p = layout.placements[0]
        assert (p.x, p.y) == (SPEC.margin, SPEC.margin)

    def test_two_tall_items_per_page(self):
        h = (SPEC.printable_height / 2) - SPEC.gutter - SPEC.caption_height
        items = [PackItem(f"c{i}", SPEC.printable_width, h) for i in range(4)]
        layout = pack(items, SPEC)
        assert layout.page_count == 2
        per_page = {}
        for p in layout.placements:
            per_page[p.page_index] = per_page.get(p.page_index, 0) + 1
        assert per_page == {0: 2, 1: 2}

    def test_empty(self):
        layout = pack([], SPEC)
        assert layout.page_count == 0
        assert layout.placements == []

    def test_oversized_rejected(self):
        with pytest.raises(PackError) as err:
            pack([PackItem("vast", SPEC.printable_width + 1, 10)], SPEC)
        assert err.value.card_id == "vast"
        with pytest.raises(PackError):
            pack([PackItem("tall", 10, SPEC.printable_height)], SPEC)  # caption overflows

    def test_deterministic(self):
        rng = np.random.default_rng(1)
        items = random_items(rng, 30)
        layouts = [pack(items, SPEC) for _ in range(5)]
        for other in layouts[1:]:
            assert other.placements == layouts[0].placements

    def test_valid_layouts_random(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            items = random_items(rng, int(rng.integers(1, 31)))
            layout = pack(items, SPEC)
            assert_layout_valid(layout, items)
            assert layout.page_count <= len(items)

    def test_never_worse_than_optimal_plus_one(self):
        rng = np.random.default_rng(3)
        for _ in range(12):
            items = random_items(rng, int(rng.integers(1, 9)))
            layout = pack(items, SPEC)
            rects = [
                (i.width + SPEC.gutter, i.height + SPEC.caption_height + SPEC.gutter)
                for i in items
            ]
            optimal = optimal_page_count(
                rects, SPEC.printable_width + SPEC.gutter, SPEC.printable_height + SPEC.gutter
            )
            assert layout.page_count <= optimal + 1

    def test_bad_spec(self):
        with pytest.raises(InvalidInputError):
            PageSpec(page_width=20, page_height=20, margin=15)

    def test_bad_item(self):
        with pytest.raises(InvalidInputError):
            PackItem("zero", 0, 10)

    def test_json_round_trip_shape(self):
        layout = pack([PackItem("a", 30, 40), PackItem("b", 30, 40)], SPEC)
        data = layout.to_json()
        assert data["page_count"] == layout.page_count
        assert len(data["placements"]) == 2
        assert data["page"]["width"] == 210
