"""Turn PDFs or image directories into a normalized page workspace."""

from __future__ import annotations

import datetime as dt
import os
import shlex
import subprocess
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import EmptyDocumentError, IngestError, InvalidInputError
from .pdfpages import PdfImageDocument
from .raster import save_png
from .storage import ProjectStore, checksum_file

DEFAULT_DPI = 300
MANIFEST_SCHEMA = 1

IMAGE_EXTENSIONS = {".png", ".jpg", ".jpeg", ".tif", ".tiff", ".bmp", ".gif", ".webp"}

# Template for an external rasterizer, e.g.
#   "pdftoppm -r {dpi} -f {page} -l {page} -png {pdf} {out_prefix}"
RENDERER_ENV = "LENS_PDF_RENDERER"


@dataclass
class PageImage:
    page_no: int
    width: int
    height: int
    dpi: float
    file: str  # path relative to the project directory
    checksum: str

    def to_json(self) -> dict:
        return {
            "page_no": self.page_no,
            "width": self.width,
            "height": self.height,
            "dpi": self.dpi,
            "file": self.file,
            "checksum": self.checksum,
        }

    @classmethod
    def from_json(cls, data: dict) -> "PageImage":
        return cls(**{k: data[k] for k in ("page_no", "width", "height", "dpi", "file", "checksum")})


@dataclass
class Project:
    id: str
    source_path: str
    source_kind: str  # "pdf" | "image-dir"
    dpi: float
    created_at: str
    pages: list[PageImage] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "schema": MANIFEST_SCHEMA,
            "id": self.id,
            "source": {"path": self.source_path, "kind": self.source_kind},
            "dpi": self.dpi,
            "created_at": self.created_at,
            "pages": [p.to_json() for p in self.pages],
        }

    @classmethod
    def from_json(cls, data: dict) -> "Project":
        return cls(
            id=data["id"],
            source_path=data["source"]["path"],
            source_kind=data["source"]["kind"],
            dpi=data["dpi"],
            created_at=data["created_at"],
            pages=[PageImage.from_json(p) for p in data["pages"]],
        )


def load_project(root: str | Path, project_id: str) -> Project:
    return Project.from_json(ProjectStore.open(root, project_id).read_manifest())


class BuiltinPdfRenderer:
    """Renders image-based PDFs with the bundled reader."""

    def __init__(self, path: str | Path):
        self.doc = PdfImageDocument(path)

    @property
    def page_count(self) -> int:
        return self.doc.page_count

    def render(self, page_no: int, dpi: float) -> np.ndarray:
        return self.doc.render_page(page_no, dpi)


class CommandPdfRenderer:
    """Shells out to an external rasterizer command template.

    The template receives ``{pdf}``, ``{page}``, ``{dpi}`` and ``{out_prefix}``
    and must write ``<out_prefix>*.png``; page counting still uses the bundled
    structure parser.
    """

    def __init__(self, path: str | Path, template: str):
        self.path = Path(path)
        self.template = template
        self.doc = PdfImageDocument(path)

    @property
    def page_count(self) -> int:
        return self.doc.page_count

    def render(self, page_no: int, dpi: float) -> np.ndarray:
        with tempfile.TemporaryDirectory() as tmp:
            prefix = os.path.join(tmp, "page")
            cmd = self.template.format(
                pdf=shlex.quote(str(self.path)),
                page=page_no,
                dpi=dpi,
                out_prefix=shlex.quote(prefix),
            )
            result = subprocess.run(cmd, shell=True, capture_output=True)
            if result.returncode != 0:
                raise IngestError(
                    f"renderer command failed on page {page_no}: "
                    f"{result.stderr.decode(errors='replace')[:500]}"
                )
            produced = sorted(Path(tmp).glob("page*.png"))
            if not produced:
                raise IngestError(f"renderer produced no output for page {page_no}")
            with Image.open(produced[0]) as im:
                return np.asarray(im.convert("RGB"))


def open_pdf_renderer(path: str | Path):
    template = os.environ.get(RENDERER_ENV)
    if template:
        return CommandPdfRenderer(path, template)
    return BuiltinPdfRenderer(path)


def _utc_now() -> str:
    return dt.datetime.now(dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _init_project_dirs(store: ProjectStore) -> None:
    store.pages_dir.mkdir(parents=True, exist_ok=True)
    (store.dir / "detections").mkdir(exist_ok=True)
    store.cards_dir.mkdir(exist_ok=True)
    store.exports_dir.mkdir(exist_ok=True)


def ingest_pdf(
    path: str | Path,
    root: str | Path,
    project_id: str,
    dpi: float = DEFAULT_DPI,
    renderer=None,
) -> Project:
    """Rasterize every PDF page into a fresh project workspace."""
    if not 72 <= dpi <= 1200:
        raise InvalidInputError(f"dpi must be within [72, 1200], got {dpi}")
    path = Path(path)
    if not path.is_file():
        raise IngestError(f"{path}: no such file")
    renderer = renderer or open_pdf_renderer(path)
    if renderer.page_count == 0:
        raise EmptyDocumentError(f"{path}: no pages")

    store = ProjectStore(root, project_id)
    _init_project_dirs(store)
    project = Project(
        id=project_id,
        source_path=str(path),
        source_kind="pdf",
        dpi=dpi,
        created_at=_utc_now(),
    )
    for page_no in range(1, renderer.page_count + 1):
        try:
            pixels = renderer.render(page_no, dpi)
        except IngestError:
            raise
        except Exception as exc:
            raise IngestError(f"{path}: failed to render page {page_no}: {exc}") from exc
        out = store.page_path(page_no)
        save_png(pixels, out)
        project.pages.append(
            PageImage(
                page_no=page_no,
                width=pixels.shape[1],
                height=pixels.shape[0],
                dpi=dpi,
                file=str(out.relative_to(store.dir)),
                checksum=checksum_file(out),
            )
        )
    store.write_manifest(project.to_json())
    return project


def ingest_images(
    directory: str | Path,
    root: str | Path,
    project_id: str,
    dpi: float = DEFAULT_DPI,
) -> tuple[Project, list[str]]:
    """Build a project from a directory of page images, lexicographic order.

    Returns the project plus warnings for skipped (unreadable) files.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise IngestError(f"{directory}: not a directory")
    candidates = sorted(
        p for p in directory.iterdir()
        if p.is_file() and p.suffix.lower() in IMAGE_EXTENSIONS
    )
    warnings: list[str] = []

    store = ProjectStore(root, project_id)
    _init_project_dirs(store)
    project = Project(
        id=project_id,
        source_path=str(directory),
        source_kind="image-dir",
        dpi=dpi,
        created_at=_utc_now(),
    )
    page_no = 0
    for src in candidates:
        try:
            with Image.open(src) as im:
                pixels = np.asarray(im.convert("RGB"))
        except Exception as exc:
            warnings.append(f"{src.name}: skipped ({exc})")
            continue
        page_no += 1
        out = store.page_path(page_no)
        save_png(pixels, out)
        project.pages.append(
            PageImage(
                page_no=page_no,
                width=pixels.shape[1],
                height=pixels.shape[0],
                dpi=dpi,
                file=str(out.relative_to(store.dir)),
                checksum=checksum_file(out),
            )
        )
    if not project.pages:
        raise EmptyDocumentError(f"{directory}: no usable images")
    store.write_manifest(project.to_json())
    return project, warnings


def validate_project(root: str | Path, project_id: str) -> list[dict]:
    """Check the manifest against the files on disk; empty report == healthy."""
    store = ProjectStore.open(root, project_id)
    project = Project.from_json(store.read_manifest())
    report: list[dict] = []
    expected = 1
    for page in project.pages:
        if page.page_no != expected:
            report.append(
                {"kind": "numbering-gap", "page_no": page.page_no, "expected": expected}
            )
        expected = page.page_no + 1
        target = store.dir / page.file
        if not target.is_file():
            report.append({"kind": "missing-file", "page_no": page.page_no, "file": page.file})
            continue
        if checksum_file(target) != page.checksum:
            report.append(
                {"kind": "checksum-mismatch", "page_no": page.page_no, "file": page.file}
            )
            continue
        with Image.open(target) as im:
            if im.size != (page.width, page.height):
                report.append(
                    {"kind": "dimension-mismatch", "page_no": page.page_no, "file": page.file}
                )
    return report
