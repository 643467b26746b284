"""Card extraction, orientation canonicalization, augmentation, catalog.

A card is one accepted detection cut out as an RGBA PNG plus its labels.
Canonical presentation is mouth-up (TOP) with the profile section on the
left (LEFT); the card index lives in ``cards/cards.json`` and the catalog is
a single RFC 4180 CSV per project.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .detect import accepted_detections, load_detection_sets
from .errors import ExtractionError, InvalidInputError, NotFoundError
from .ingest import Project
from .raster import crop_with_alpha, flip, load_image, save_png
from .storage import ProjectStore, atomic_write_bytes, atomic_write_json, read_json

CARDS_SCHEMA = 1
HEAD_THRESHOLD = 0.5

TYPE_LABELS = ("ENT", "FRAG")
POSITION_LABELS = ("TOP", "BOTTOM")
ROTATION_LABELS = ("LEFT", "RIGHT")


@dataclass
class HeadPrediction:
    """Per-head positive-class probabilities: FRAG, BOTTOM, RIGHT."""

    type_p: float = 0.0
    position_p: float = 0.0
    rotation_p: float = 0.0
    source: str = "model"

    def __post_init__(self):
        for name in ("type_p", "position_p", "rotation_p"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvalidInputError(f"{name} {value} not in [0,1]")
            if self.source == "human" and value not in (0.0, 1.0):
                raise InvalidInputError("human heads must be 0 or 1")
        if self.source not in ("model", "human"):
            raise InvalidInputError(f"unknown head source {self.source!r}")

    def to_json(self) -> dict:
        return {
            "type_p": self.type_p,
            "position_p": self.position_p,
            "rotation_p": self.rotation_p,
            "source": self.source,
        }

    @classmethod
    def from_json(cls, data: dict) -> "HeadPrediction":
        return cls(**{k: data[k] for k in ("type_p", "position_p", "rotation_p", "source")})


@dataclass
class CardLabels:
    type: str = "ENT"
    position: str = "TOP"
    rotation: str = "LEFT"

    def __post_init__(self):
        if self.type not in TYPE_LABELS:
            raise InvalidInputError(f"type must be one of {TYPE_LABELS}")
        if self.position not in POSITION_LABELS:
            raise InvalidInputError(f"position must be one of {POSITION_LABELS}")
        if self.rotation not in ROTATION_LABELS:
            raise InvalidInputError(f"rotation must be one of {ROTATION_LABELS}")

    def to_json(self) -> dict:
        return {"type": self.type, "position": self.position, "rotation": self.rotation}

    @classmethod
    def from_json(cls, data: dict) -> "CardLabels":
        return cls(type=data["type"], position=data["position"], rotation=data["rotation"])


@dataclass
class InstanceCard:
    card_id: str
    detection_id: str
    file: str  # relative to the project directory
    labels: CardLabels = field(default_factory=CardLabels)
    canonical: bool = False
    catalog_id: str | None = None
    heads: HeadPrediction | None = None
    source_labels: CardLabels | None = None  # pre-canonical orientation

    def to_json(self) -> dict:
        data = {
            "card_id": self.card_id,
            "detection_id": self.detection_id,
            "file": self.file,
            "labels": self.labels.to_json(),
            "canonical": self.canonical,
            "catalog_id": self.catalog_id,
        }
        if self.heads is not None:
            data["heads"] = self.heads.to_json()
        if self.source_labels is not None:
            data["source_labels"] = self.source_labels.to_json()
        return data

    @classmethod
    def from_json(cls, data: dict) -> "InstanceCard":
        return cls(
            card_id=data["card_id"],
            detection_id=data["detection_id"],
            file=data["file"],
            labels=CardLabels.from_json(data["labels"]),
            canonical=data.get("canonical", False),
            catalog_id=data.get("catalog_id"),
            heads=HeadPrediction.from_json(data["heads"]) if data.get("heads") else None,
            source_labels=(
                CardLabels.from_json(data["source_labels"])
                if data.get("source_labels")
                else None
            ),
        )


def load_cards(store: ProjectStore) -> dict[str, InstanceCard]:
    if not store.cards_index_path.exists():
        return {}
    data = read_json(store.cards_index_path)
    return {c["card_id"]: InstanceCard.from_json(c) for c in data.get("cards", [])}


def save_cards(store: ProjectStore, cards: dict[str, InstanceCard]) -> None:
    payload = {
        "schema": CARDS_SCHEMA,
        "cards": [cards[k].to_json() for k in sorted(cards)],
    }
    atomic_write_json(store.cards_index_path, payload)


def extract_cards(
    root: str | Path, project: Project, padding: int = 8
) -> list[InstanceCard]:
    """Cut every accepted detection into an RGBA card; rejected ones skipped.

    Naming is deterministic (``page{NNNN}_det{MM}``) so re-running the
    extraction reproduces identical files.
    """
    store = ProjectStore.open(root, project.id)
    pages = {p.page_no: p for p in project.pages}
    sets = load_detection_sets(store)
    cards = load_cards(store)
    out: list[InstanceCard] = []

    by_page: dict[int, list] = {}
    for det in accepted_detections(sets):
        by_page.setdefault(det.page_no, []).append(det)

    for page_no in sorted(by_page):
        page = pages.get(page_no)
        if page is None:
            raise ExtractionError(f"page {page_no} missing from manifest")
        page_file = store.dir / page.file
        if not page_file.is_file():
            raise ExtractionError(f"page file {page.file} missing")
        pixels = load_image(page_file)
        for index, det in enumerate(by_page[page_no], start=1):
            card_id = f"page{page_no:04d}_det{index:02d}"
            mask = det.mask(page.width, page.height)
            if not mask.any():
                raise ExtractionError(f"detection {det.id} rasterizes to nothing")
            card_pixels = crop_with_alpha(pixels, mask, padding)
            path = store.card_path(card_id)
            save_png(card_pixels, path)
            card = InstanceCard(
                card_id=card_id,
                detection_id=det.id,
                file=str(path.relative_to(store.dir)),
                labels=cards.get(card_id, InstanceCard(card_id, det.id, "")).labels,
                canonical=False,
            )
            if card_id in cards:  # keep heads/catalog linkage over re-extraction
                card.heads = cards[card_id].heads
                card.catalog_id = cards[card_id].catalog_id
            cards[card_id] = card
            out.append(card)
    save_cards(store, cards)
    return out


def decide_labels(pred: HeadPrediction, threshold: float = HEAD_THRESHOLD) -> CardLabels:
    """Threshold each head; >= threshold means the positive label."""
    return CardLabels(
        type="FRAG" if pred.type_p >= threshold else "ENT",
        position="BOTTOM" if pred.position_p >= threshold else "TOP",
        rotation="RIGHT" if pred.rotation_p >= threshold else "LEFT",
    )


def canonical_flips(labels: CardLabels) -> tuple[bool, bool]:
    """(vertical, horizontal) flips that bring labels to TOP/LEFT."""
    return labels.position == "BOTTOM", labels.rotation == "RIGHT"


def canonicalize(
    root: str | Path,
    project: Project,
    card_id: str,
    pred: HeadPrediction,
    threshold: float = HEAD_THRESHOLD,
) -> InstanceCard:
    """Flip a card into mouth-up, section-left presentation."""
    store = ProjectStore.open(root, project.id)
    cards = load_cards(store)
    if card_id not in cards:
        raise NotFoundError(f"card {card_id!r} not found")
    card = cards[card_id]
    path = store.dir / card.file
    if not path.is_file():
        raise ExtractionError(f"card image {card.file} missing")

    decided = decide_labels(pred, threshold)
    vertical, horizontal = canonical_flips(decided)
    if vertical or horizontal:
        image = load_image(path)
        save_png(flip(image, vertical=vertical, horizontal=horizontal), path)
    card.source_labels = decided
    card.labels = CardLabels(type=decided.type, position="TOP", rotation="LEFT")
    card.canonical = True
    card.heads = pred
    cards[card_id] = card
    save_cards(store, cards)
    return card


# -- orientation augmentation -------------------------------------------------


def _rot90cw(image: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(np.rot90(image, k=-1))


def augment_orientations(image: np.ndarray, type_label: str = "ENT", flips_only: bool = False):
    """All orientation variants of a canonical card.

    The four axis flips carry exact position/rotation labels; the four
    quarter-turn (transposed) variants reuse the flip labeling composed with
    the rotation and are flagged ``transposed`` since the plain labels do not
    describe them.  Returns a list of dicts.
    """
    variants = []
    for vertical, horizontal in ((False, False), (False, True), (True, False), (True, True)):
        labels = CardLabels(
            type=type_label,
            position="BOTTOM" if vertical else "TOP",
            rotation="RIGHT" if horizontal else "LEFT",
        )
        suffix = ("v" if vertical else "") + ("h" if horizontal else "")
        variants.append(
            {
                "name": f"flip_{suffix}" if suffix else "identity",
                "image": flip(image, vertical=vertical, horizontal=horizontal),
                "labels": labels,
                "transposed": False,
            }
        )
    if flips_only:
        return variants
    rotated = _rot90cw(image)
    for vertical, horizontal in ((False, False), (False, True), (True, False), (True, True)):
        labels = CardLabels(
            type=type_label,
            position="BOTTOM" if vertical else "TOP",
            rotation="RIGHT" if horizontal else "LEFT",
        )
        suffix = ("v" if vertical else "") + ("h" if horizontal else "")
        variants.append(
            {
                "name": "rot90" + (f"_flip_{suffix}" if suffix else ""),
                "image": flip(rotated, vertical=vertical, horizontal=horizontal),
                "labels": labels,
                "transposed": True,
            }
        )
    return variants


# -- catalog ------------------------------------------------------------------

FIXED_COLUMNS = ("catalog_id", "card_id")


def _read_catalog(store: ProjectStore) -> tuple[list[str], dict[str, dict]]:
    """Returns (user columns, rows keyed by card_id)."""
    if not store.catalog_path.exists():
        return [], {}
    with open(store.catalog_path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        columns = [c for c in (reader.fieldnames or []) if c not in FIXED_COLUMNS]
        rows = {row["card_id"]: dict(row) for row in reader}
    return columns, rows


def _write_catalog(store: ProjectStore, columns: list[str], rows: dict[str, dict]) -> None:
    buffer = io.StringIO()
    writer = csv.DictWriter(
        buffer, fieldnames=list(FIXED_COLUMNS) + columns, lineterminator="\r\n"
    )
    writer.writeheader()
    for card_id in sorted(rows):
        writer.writerow({c: rows[card_id].get(c, "") for c in list(FIXED_COLUMNS) + columns})
    atomic_write_bytes(store.catalog_path, buffer.getvalue().encode("utf-8"))


@dataclass
class CatalogRecord:
    catalog_id: str
    card_id: str
    fields: dict


def upsert_record(
    root: str | Path, project: Project, card_id: str, fields: dict
) -> CatalogRecord:
    """Create or update the catalog row bound to a card.

    New columns are appended and back-filled with empty strings everywhere.
    """
    store = ProjectStore.open(root, project.id)
    cards = load_cards(store)
    if card_id not in cards:
        raise NotFoundError(f"card {card_id!r} not found")
    for key in fields:
        if key in FIXED_COLUMNS:
            raise InvalidInputError(f"column {key!r} is reserved")

    columns, rows = _read_catalog(store)
    for key in fields:
        if key not in columns:
            columns.append(key)
    if card_id in rows:
        catalog_id = rows[card_id]["catalog_id"]
        rows[card_id].update({k: str(v) for k, v in fields.items()})
    else:
        catalog_id = f"c{len(rows) + 1:04d}"
        taken = {r["catalog_id"] for r in rows.values()}
        while catalog_id in taken:
            catalog_id = f"c{int(catalog_id[1:]) + 1:04d}"
        row = {"catalog_id": catalog_id, "card_id": card_id}
        row.update({k: str(v) for k, v in fields.items()})
        rows[card_id] = row
    _write_catalog(store, columns, rows)

    cards[card_id].catalog_id = catalog_id
    save_cards(store, cards)
    record_fields = {c: rows[card_id].get(c, "") for c in columns}
    return CatalogRecord(catalog_id=catalog_id, card_id=card_id, fields=record_fields)


def export_catalog(root: str | Path, project: Project) -> Path:
    """Rewrite the catalog CSV from its parsed form; a fixed point on re-export."""
    store = ProjectStore.open(root, project.id)
    columns, rows = _read_catalog(store)
    _write_catalog(store, columns, rows)
    return store.catalog_path


def read_catalog_rows(root: str | Path, project: Project) -> list[dict]:
    store = ProjectStore.open(root, project.id)
    columns, rows = _read_catalog(store)
    return [
        {c: rows[card_id].get(c, "") for c in list(FIXED_COLUMNS) + columns}
        for card_id in sorted(rows)
    ]
