"""Detection sets, confidence filtering, morphology post-processing.

Backends are data-only: ``infer(page_no, image) -> [(polygon, score), ...]``.
The oracle backend replays stored predictions, which keeps the whole pipeline
testable without any neural runtime.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DetectionError,
    InvalidGeometryError,
    InvalidInputError,
    NotFoundError,
    SchemaError,
)
from .geometry import as_polygon, polygon_bbox, rasterize_polygon, trace_contour
from .ingest import PageImage, Project
from .morphology import connected_components, dilate, fill_holes
from .storage import ProjectStore, atomic_write_json, read_json

PREDICTION_SCHEMA = 1

ORIGINS = ("model", "manual", "imported")
REVIEW_STATES = ("unreviewed", "accepted", "edited", "rejected")
ACCEPTED_STATES = ("accepted", "edited")

MIN_AREA_AT_300 = 64


def default_min_area(dpi: float) -> int:
    """Speck floor of 64 px at 300 dpi, scaled with the pixel density."""
    return round(MIN_AREA_AT_300 * (dpi / 300.0) ** 2)


@dataclass
class InferenceParams:
    conf_threshold: float = 0.25
    dilation_radius: int = 0
    fill_holes: bool = False
    min_area_px: int = 64

    def __post_init__(self):
        if not 0.0 <= self.conf_threshold <= 1.0:
            raise InvalidInputError(f"conf_threshold {self.conf_threshold} not in [0,1]")
        if self.dilation_radius < 0:
            raise InvalidInputError("dilation_radius must be >= 0")
        if self.min_area_px < 0:
            raise InvalidInputError("min_area_px must be >= 0")

    def to_json(self) -> dict:
        return {
            "conf_threshold": self.conf_threshold,
            "dilation_radius": self.dilation_radius,
            "fill_holes": self.fill_holes,
            "min_area_px": self.min_area_px,
        }

    @classmethod
    def from_json(cls, data: dict) -> "InferenceParams":
        return cls(**{k: data[k] for k in cls().to_json() if k in data})


@dataclass
class Detection:
    id: str
    page_no: int
    polygon: np.ndarray
    score: float
    origin: str = "model"
    review: str = "unreviewed"

    def __post_init__(self):
        self.polygon = as_polygon(self.polygon)
        if not 0.0 <= self.score <= 1.0:
            raise InvalidInputError(f"score {self.score} not in [0,1]")
        if self.origin not in ORIGINS:
            raise InvalidInputError(f"unknown origin {self.origin!r}")
        if self.review not in REVIEW_STATES:
            raise InvalidInputError(f"unknown review state {self.review!r}")
        if self.origin == "manual" and self.score != 1.0:
            raise InvalidInputError("manual detections carry score 1.0")

    @property
    def bbox(self):
        return polygon_bbox(self.polygon)

    def mask(self, width: int, height: int) -> np.ndarray:
        return rasterize_polygon(self.polygon, width, height)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "score": round(float(self.score), 6),
            "polygon": [[float(x), float(y)] for x, y in self.polygon],
            "origin": self.origin,
            "review": self.review,
        }


@dataclass
class DetectionSet:
    page_no: int
    detections: list[Detection] = field(default_factory=list)
    params: InferenceParams | None = None
    backend_id: str = ""
    version: int = 0


def _postprocess_mask(mask: np.ndarray, params: InferenceParams) -> np.ndarray | None:
    """Fill, dilate, and drop small components; None when nothing survives.

    When several components survive, the largest one becomes the instance:
    satellites below the area floor are specks, larger splits are left for
    the reviewer.
    """
    if params.fill_holes:
        mask = fill_holes(mask)
    if params.dilation_radius > 0:
        mask = dilate(mask, params.dilation_radius)
    if not mask.any():
        return None
    parts = connected_components(mask, connectivity=8)
    parts = [p for p in parts if p.sum() >= max(1, params.min_area_px)]
    if not parts:
        return None
    return parts[0]


def run_detection(
    page: PageImage,
    image: np.ndarray | None,
    backend,
    params: InferenceParams,
) -> DetectionSet:
    """Run a backend on one page and post-process the surviving instances."""
    try:
        raw = backend.infer(page.page_no, image)
    except SchemaError:
        raise
    except Exception as exc:
        raise DetectionError(
            f"backend {getattr(backend, 'backend_id', '?')} failed on page "
            f"{page.page_no}: {exc}",
            page_no=page.page_no,
        ) from exc

    detections = []
    index = 0
    for polygon, score in raw:
        if score < params.conf_threshold:
            continue
        mask = rasterize_polygon(polygon, page.width, page.height)
        kept = _postprocess_mask(mask, params)
        if kept is None:
            continue
        index += 1
        detections.append(
            Detection(
                id=f"p{page.page_no}_d{index}",
                page_no=page.page_no,
                polygon=trace_contour(kept),
                score=float(score),
            )
        )
    return DetectionSet(
        page_no=page.page_no,
        detections=detections,
        params=params,
        backend_id=getattr(backend, "backend_id", "unknown"),
    )


# -- prediction JSON interchange --------------------------------------------


def _check(cond, message, pointer):
    if not cond:
        raise SchemaError(message, pointer)


def parse_prediction_file(data, source: str = "") -> dict[int, dict]:
    """Validate the prediction schema and index pages by number.

    Returns ``{page_no: {"version", "backend_id", "params", "detections"}}``
    where detections hold raw dicts (polygon, score, origin, review).
    """
    _check(isinstance(data, dict), "document must be an object", "")
    _check(data.get("schema") == PREDICTION_SCHEMA, "schema must be 1", "/schema")
    pages = data.get("pages")
    _check(isinstance(pages, list), "pages must be an array", "/pages")
    out: dict[int, dict] = {}
    for i, page in enumerate(pages):
        where = f"/pages/{i}"
        _check(isinstance(page, dict), "page must be an object", where)
        page_no = page.get("page_no")
        _check(isinstance(page_no, int) and page_no >= 1, "page_no must be >= 1", f"{where}/page_no")
        _check(page_no not in out, f"duplicate page {page_no}", f"{where}/page_no")
        detections = page.get("detections", [])
        _check(isinstance(detections, list), "detections must be an array", f"{where}/detections")
        rows = []
        for j, det in enumerate(detections):
            at = f"{where}/detections/{j}"
            _check(isinstance(det, dict), "detection must be an object", at)
            polygon = det.get("polygon")
            _check(isinstance(polygon, list), "polygon must be an array", f"{at}/polygon")
            _check(len(polygon) >= 3, "polygon needs >= 3 vertices", f"{at}/polygon")
            for k, vertex in enumerate(polygon):
                _check(
                    isinstance(vertex, list)
                    and len(vertex) == 2
                    and all(isinstance(v, (int, float)) for v in vertex),
                    "vertex must be [x, y]",
                    f"{at}/polygon/{k}",
                )
            score = det.get("score", 1.0)
            _check(
                isinstance(score, (int, float)) and 0.0 <= score <= 1.0,
                "score must be in [0,1]",
                f"{at}/score",
            )
            origin = det.get("origin", "model")
            _check(origin in ORIGINS, f"origin must be one of {ORIGINS}", f"{at}/origin")
            review = det.get("review", "unreviewed")
            _check(
                review in REVIEW_STATES, f"review must be one of {REVIEW_STATES}", f"{at}/review"
            )
            rows.append(
                {
                    "id": det.get("id") or f"p{page_no}_d{j + 1}",
                    "score": float(score),
                    "polygon": polygon,
                    "origin": origin,
                    "review": review,
                }
            )
        out[page_no] = {
            "version": int(page.get("version", 0)),
            "backend_id": page.get("backend_id", source),
            "params": page.get("params"),
            "detections": rows,
        }
    return out


class OracleBackend:
    """Backend answering inference from a stored prediction file."""

    def __init__(self, pages: dict[int, dict], backend_id: str):
        self.pages = pages
        self.backend_id = backend_id

    def infer(self, page_no: int, image=None):
        rows = self.pages.get(page_no, {"detections": []})["detections"]
        return [(row["polygon"], row["score"]) for row in rows]


def load_oracle_predictions(path: str | Path) -> OracleBackend:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}", "") from exc
    pages = parse_prediction_file(data, source=f"oracle:{path.name}")
    return OracleBackend(pages, backend_id=f"oracle:{path.name}")


# -- persistence -------------------------------------------------------------


def load_detection_sets(store: ProjectStore) -> dict[int, DetectionSet]:
    if not store.detections_path.exists():
        return {}
    data = read_json(store.detections_path)
    pages = parse_prediction_file(data)
    out: dict[int, DetectionSet] = {}
    for page_no, entry in pages.items():
        detections = [
            Detection(
                id=row["id"],
                page_no=page_no,
                polygon=row["polygon"],
                score=row["score"],
                origin=row["origin"],
                review=row["review"],
            )
            for row in entry["detections"]
        ]
        out[page_no] = DetectionSet(
            page_no=page_no,
            detections=detections,
            params=InferenceParams.from_json(entry["params"]) if entry["params"] else None,
            backend_id=entry["backend_id"] or "",
            version=entry["version"],
        )
    return out


def save_detection_sets(store: ProjectStore, sets: dict[int, DetectionSet]) -> None:
    pages = []
    for page_no in sorted(sets):
        detset = sets[page_no]
        page = {
            "page_no": page_no,
            "version": detset.version,
            "backend_id": detset.backend_id,
            "detections": [d.to_json() for d in detset.detections],
        }
        if detset.params is not None:
            page["params"] = detset.params.to_json()
        pages.append(page)
    atomic_write_json(
        store.detections_path, {"schema": PREDICTION_SCHEMA, "pages": pages}
    )


def detect_project(
    root: str | Path,
    project: Project,
    backend,
    params: InferenceParams,
    load_pixels=None,
    progress=None,
) -> dict[int, DetectionSet]:
    """Run detection over every page and persist the result."""
    from .raster import load_image

    store = ProjectStore.open(root, project.id)
    existing = load_detection_sets(store)
    results: dict[int, DetectionSet] = {}
    for i, page in enumerate(project.pages):
        image = None
        if getattr(backend, "needs_pixels", False):
            loader = load_pixels or (lambda p: load_image(store.dir / p.file))
            image = loader(page)
        detset = run_detection(page, image, backend, params)
        detset.version = existing.get(page.page_no, DetectionSet(page.page_no)).version + 1
        results[page.page_no] = detset
        if progress:
            progress((i + 1) / len(project.pages))
    save_detection_sets(store, results)
    return results


def next_manual_id(sets: dict[int, DetectionSet], page_no: int) -> str:
    taken = {d.id for s in sets.values() for d in s.detections}
    index = len(sets.get(page_no, DetectionSet(page_no)).detections) + 1
    while f"p{page_no}_d{index}" in taken:
        index += 1
    return f"p{page_no}_d{index}"


def upsert_manual_detection(
    root: str | Path, project: Project, page_no: int, polygon
) -> Detection:
    """Add a human-drawn polygon as an accepted manual detection."""
    pages = {p.page_no: p for p in project.pages}
    if page_no not in pages:
        raise NotFoundError(f"page {page_no} not in project {project.id!r}")
    page = pages[page_no]
    poly = as_polygon(polygon)
    if (
        poly[:, 0].min() < 0
        or poly[:, 1].min() < 0
        or poly[:, 0].max() > page.width
        or poly[:, 1].max() > page.height
    ):
        raise InvalidGeometryError(
            f"polygon exceeds page bounds {page.width}x{page.height}"
        )
    store = ProjectStore.open(root, project.id)
    sets = load_detection_sets(store)
    detection = Detection(
        id=next_manual_id(sets, page_no),
        page_no=page_no,
        polygon=poly,
        score=1.0,
        origin="manual",
        review="edited",
    )
    detset = sets.setdefault(page_no, DetectionSet(page_no))
    detset.detections.append(detection)
    detset.version += 1
    save_detection_sets(store, sets)
    return detection


def delete_detection(root: str | Path, project: Project, detection_id: str) -> None:
    store = ProjectStore.open(root, project.id)
    sets = load_detection_sets(store)
    for detset in sets.values():
        for det in detset.detections:
            if det.id == detection_id:
                detset.detections.remove(det)
                detset.version += 1
                save_detection_sets(store, sets)
                return
    raise NotFoundError(f"detection {detection_id!r} not found")


def accepted_detections(sets: dict[int, DetectionSet]) -> list[Detection]:
    out = []
    for page_no in sorted(sets):
        out.extend(d for d in sets[page_no].detections if d.review in ACCEPTED_STATES)
    return out


def set_review(
    root: str | Path, project: Project, detection_ids: list[str], review: str
) -> int:
    """Mark detections accepted/rejected/etc.; returns the count changed."""
    if review not in REVIEW_STATES:
        raise InvalidInputError(f"unknown review state {review!r}")
    store = ProjectStore.open(root, project.id)
    sets = load_detection_sets(store)
    wanted = set(detection_ids)
    changed = 0
    for detset in sets.values():
        hit = False
        for det in detset.detections:
            if det.id in wanted:
                det.review = review
                wanted.discard(det.id)
                changed += 1
                hit = True
        if hit:
            detset.version += 1
    if wanted:
        raise NotFoundError(f"unknown detection ids: {sorted(wanted)}")
    save_detection_sets(store, sets)
    return changed


__all__ = [
    "ACCEPTED_STATES",
    "Detection",
    "DetectionSet",
    "InferenceParams",
    "OracleBackend",
    "accepted_detections",
    "delete_detection",
    "detect_project",
    "load_detection_sets",
    "load_oracle_predictions",
    "parse_prediction_file",
    "run_detection",
    "save_detection_sets",
    "set_review",
    "upsert_manual_detection",
]
