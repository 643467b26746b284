"""Shelf first-fit-decreasing-height packing of cards onto report pages.

Items never rotate: drawing orientation is meaningful.  Every item grows by
the caption strip before packing, shelves stack down the page separated by
the gutter, and items sit left-to-right on their shelf.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import InvalidInputError, PackError


@dataclass(frozen=True)
class PackItem:
    card_id: str
    width: float  # mm at print scale
    height: float
    caption: str = ""

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise InvalidInputError(f"item {self.card_id!r} has non-positive size")


@dataclass(frozen=True)
class PageSpec:
    page_width: float = 210.0  # A4 portrait
    page_height: float = 297.0
    margin: float = 15.0
    gutter: float = 5.0
    caption_height: float = 6.0

    def __post_init__(self):
        if self.printable_width <= 0 or self.printable_height <= 0:
            raise InvalidInputError("margins leave no printable area")
        if self.gutter < 0 or self.caption_height < 0:
            raise InvalidInputError("gutter and caption height must be >= 0")

    @property
    def printable_width(self) -> float:
        return self.page_width - 2 * self.margin

    @property
    def printable_height(self) -> float:
        return self.page_height - 2 * self.margin


@dataclass(frozen=True)
class Placement:
    card_id: str
    page_index: int  # 0-based
    x: float  # mm, top-left of the item box (caption strip included)
    y: float
    width: float
    height: float  # item height + caption strip


@dataclass
class PackedLayout:
    spec: PageSpec
    placements: list[Placement] = field(default_factory=list)
    page_count: int = 0

    def to_json(self) -> dict:
        return {
            "page": {
                "width": self.spec.page_width,
                "height": self.spec.page_height,
                "margin": self.spec.margin,
                "gutter": self.spec.gutter,
                "caption_height": self.spec.caption_height,
            },
            "page_count": self.page_count,
            "placements": [
                {
                    "card_id": p.card_id,
                    "page_index": p.page_index,
                    "x": p.x,
                    "y": p.y,
                    "width": p.width,
                    "height": p.height,
                }
                for p in self.placements
            ],
        }


@dataclass
class _Shelf:
    page: int
    y: float
    height: float
    cursor_x: float = 0.0


def pack(items: list[PackItem], spec: PageSpec) -> PackedLayout:
    """Deterministic shelf FFDH; raises PackError for oversized items."""
    for item in items:
        if item.width > spec.printable_width or (
            item.height + spec.caption_height > spec.printable_height
        ):
            raise PackError(
                f"item {item.card_id!r} ({item.width}x{item.height} mm + caption) "
                "exceeds the printable area",
                card_id=item.card_id,
            )

    ordered = sorted(
        items,
        key=lambda it: (-(it.height + spec.caption_height), -it.width, it.card_id),
    )
    shelves: list[_Shelf] = []
    page_next_y: list[float] = []
    placements: list[Placement] = []

    for item in ordered:
        box_h = item.height + spec.caption_height
        target = None
        for shelf in shelves:
            if box_h <= shelf.height and shelf.cursor_x + item.width <= spec.printable_width:
                target = shelf
                break
        if target is None:
            page = None
            for index, next_y in enumerate(page_next_y):
                if next_y + box_h <= spec.printable_height:
                    page = index
                    break
            if page is None:
                page_next_y.append(0.0)
                page = len(page_next_y) - 1
            target = _Shelf(page=page, y=page_next_y[page], height=box_h)
            page_next_y[page] += box_h + spec.gutter
            shelves.append(target)
        placements.append(
            Placement(
                card_id=item.card_id,
                page_index=target.page,
                x=spec.margin + target.cursor_x,
                y=spec.margin + target.y,
                width=item.width,
                height=box_h,
            )
        )
        target.cursor_x += item.width + spec.gutter

    return PackedLayout(
        spec=spec, placements=placements, page_count=len(page_next_y)
    )
