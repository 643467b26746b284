"""Render a packed card layout into an indexed PDF report."""

from __future__ import annotations

from pathlib import Path

from PIL import Image
from reportlab.lib.units import mm
from reportlab.pdfgen import canvas as rl_canvas

from .cards import load_cards, read_catalog_rows
from .errors import RenderError
from .ingest import Project
from .packing import PackedLayout, PackItem, PageSpec, pack
from .storage import ProjectStore, atomic_write_json

INDEX_ROWS_PER_PAGE = 40


def card_print_size_mm(path: Path, dpi: float, scale: float = 1.0) -> tuple[float, float]:
    """True print size of a card image: pixels -> mm through the ingest dpi."""
    with Image.open(path) as im:
        w_px, h_px = im.size
    return w_px / dpi * 25.4 * scale, h_px / dpi * 25.4 * scale


def build_pack_items(
    root: str | Path, project: Project, scale: float = 1.0, caption_fields=("grave",)
) -> list[PackItem]:
    """One PackItem per extracted card, captioned from the catalog."""
    store = ProjectStore.open(root, project.id)
    cards = load_cards(store)
    catalog = {row["card_id"]: row for row in read_catalog_rows(root, project)}
    items = []
    for card_id in sorted(cards):
        card = cards[card_id]
        path = store.dir / card.file
        if not path.is_file():
            raise RenderError(f"card image {card.file} missing")
        width_mm, height_mm = card_print_size_mm(path, project.dpi, scale)
        row = catalog.get(card_id, {})
        extra = " ".join(
            f"{k}:{row[k]}" for k in caption_fields if row.get(k)
        )
        caption = card_id if not extra else f"{card_id}  {extra}"
        items.append(
            PackItem(card_id=card_id, width=width_mm, height=height_mm, caption=caption)
        )
    return items


def render_pdf(
    root: str | Path,
    project: Project,
    layout: PackedLayout,
    items: list[PackItem],
    out_path: str | Path,
) -> Path:
    """Draw every placement at true scale plus a final card index.

    Output bytes are reproducible: the canvas runs in invariant mode with a
    fixed creation date.
    """
    store = ProjectStore.open(root, project.id)
    cards = load_cards(store)
    by_id = {item.card_id: item for item in items}
    spec = layout.spec
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)

    canvas = rl_canvas.Canvas(
        str(out_path),
        pagesize=(spec.page_width * mm, spec.page_height * mm),
        invariant=1,
    )
    canvas.setTitle(f"{project.id} cards")

    for page_index in range(layout.page_count):
        for placement in layout.placements:
            if placement.page_index != page_index:
                continue
            card = cards.get(placement.card_id)
            if card is None:
                raise RenderError(f"layout references unknown card {placement.card_id!r}")
            path = store.dir / card.file
            if not path.is_file():
                raise RenderError(f"card image {card.file} missing")
            item = by_id[placement.card_id]
            image_h = placement.height - spec.caption_height
            x_pt = placement.x * mm
            # PDF origin is bottom-left; layout y grows downward from top
            y_pt = (spec.page_height - placement.y - image_h) * mm
            canvas.drawImage(
                str(path),
                x_pt,
                y_pt,
                width=item.width * mm,
                height=image_h * mm,
                mask="auto",
            )
            canvas.setFont("Helvetica", 7)
            canvas.drawString(
                x_pt, y_pt - 3 * mm, item.caption[:120]
            )
        canvas.showPage()

    _draw_index(canvas, layout, spec)
    canvas.save()
    return out_path


def _draw_index(canvas, layout: PackedLayout, spec: PageSpec) -> None:
    entries = sorted(
        (p.card_id, p.page_index + 1) for p in layout.placements
    )
    canvas.setFont("Helvetica-Bold", 12)
    top = (spec.page_height - spec.margin) * mm
    canvas.drawString(spec.margin * mm, top, "Card index")
    canvas.setFont("Helvetica", 9)
    if not entries:
        canvas.drawString(spec.margin * mm, top - 8 * mm, "No items.")
        canvas.showPage()
        return
    line = 0
    for card_id, page in entries:
        if line == INDEX_ROWS_PER_PAGE:
            canvas.showPage()
            canvas.setFont("Helvetica", 9)
            line = 0
        y = top - 8 * mm - line * 5 * mm
        canvas.drawString(spec.margin * mm, y, card_id)
        canvas.drawRightString((spec.page_width - spec.margin) * mm, y, f"page {page}")
        line += 1
    canvas.showPage()


def index_page_count(n_items: int) -> int:
    if n_items == 0:
        return 1
    return (n_items + INDEX_ROWS_PER_PAGE - 1) // INDEX_ROWS_PER_PAGE


def report_project(
    root: str | Path,
    project: Project,
    spec: PageSpec | None = None,
    scale: float = 1.0,
) -> tuple[Path, PackedLayout]:
    """Pack all cards and write exports/report.pdf plus the layout sidecar."""
    spec = spec or PageSpec()
    store = ProjectStore.open(root, project.id)
    items = build_pack_items(root, project, scale)
    layout = pack(items, spec)
    sidecar = store.exports_dir / "layout.json"
    atomic_write_json(sidecar, layout.to_json())
    pdf_path = render_pdf(root, project, layout, items, store.exports_dir / "report.pdf")
    return pdf_path, layout
