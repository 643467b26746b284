"""Project workspace layout and atomic file IO.

Every stage reads and writes through this filesystem contract:

    <root>/<project_id>/
        manifest.json        project + page metadata
        pages/0001.png       lossless page images
        detections/detections.json
        cards/*.png, cards/cards.json
        catalog.csv
        exports/             reports and YOLO datasets
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import tempfile
from pathlib import Path

from .errors import InvalidInputError, NotFoundError

_SLUG = re.compile(r"^[a-z0-9][a-z0-9_-]*$")


def checksum_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def atomic_write_bytes(path: str | Path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_json(path: str | Path, payload) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False)
    atomic_write_bytes(path, text.encode("utf-8") + b"\n")


def read_json(path: str | Path):
    with open(path, encoding="utf-8") as handle:
        return json.load(handle)


class ProjectStore:
    """Path helper for one project under a workspace root."""

    def __init__(self, root: str | Path, project_id: str):
        if not _SLUG.match(project_id):
            raise InvalidInputError(
                f"project id {project_id!r} must be a lowercase slug"
            )
        self.root = Path(root)
        self.project_id = project_id
        self.dir = self.root / project_id

    @classmethod
    def open(cls, root: str | Path, project_id: str) -> "ProjectStore":
        store = cls(root, project_id)
        if not store.manifest_path.exists():
            raise NotFoundError(f"project {project_id!r} not found under {root}")
        return store

    @staticmethod
    def list_projects(root: str | Path) -> list[str]:
        root = Path(root)
        if not root.is_dir():
            return []
        return sorted(
            p.name for p in root.iterdir() if (p / "manifest.json").is_file()
        )

    @property
    def manifest_path(self) -> Path:
        return self.dir / "manifest.json"

    @property
    def pages_dir(self) -> Path:
        return self.dir / "pages"

    def page_path(self, page_no: int) -> Path:
        return self.pages_dir / f"{page_no:04d}.png"

    @property
    def detections_path(self) -> Path:
        return self.dir / "detections" / "detections.json"

    @property
    def cards_dir(self) -> Path:
        return self.dir / "cards"

    @property
    def cards_index_path(self) -> Path:
        return self.cards_dir / "cards.json"

    @property
    def catalog_path(self) -> Path:
        return self.dir / "catalog.csv"

    @property
    def exports_dir(self) -> Path:
        return self.dir / "exports"

    def card_path(self, card_id: str) -> Path:
        return self.cards_dir / f"{card_id}.png"

    def read_manifest(self) -> dict:
        if not self.manifest_path.exists():
            raise NotFoundError(f"project {self.project_id!r} has no manifest")
        return read_json(self.manifest_path)

    def write_manifest(self, manifest: dict) -> None:
        atomic_write_json(self.manifest_path, manifest)
