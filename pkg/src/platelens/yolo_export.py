"""Export reviewed detections as a YOLO segmentation dataset, and read it back.

Layout::

    <dataset>/
        images/{train,val}/pageNNNN.png
        labels/{train,val}/pageNNNN.txt
        data.yaml
        provenance.json     (origin/review per instance; optional consumer)

Label lines are ``<class_id> <x1> <y1> ...`` with coordinates normalized by
page size, six decimals, LF endings.  Splitting happens at page granularity
so near-identical crops never straddle train and val.
"""

from __future__ import annotations

import random
import shutil
from pathlib import Path

import yaml
from PIL import Image

from .detect import load_detection_sets
from .errors import EmptyDatasetError, InvalidInputError, LabelParseError
from .ingest import Project
from .storage import ProjectStore, atomic_write_json

CLASS_NAME = "vessel"


def split_pages(page_nos: list[int], ratio: float, seed: int) -> tuple[list[int], list[int]]:
    """Seeded page-level split; train size is the rounded ratio share."""
    if not 0.0 < ratio < 1.0:
        raise InvalidInputError(f"split ratio must be in (0,1), got {ratio}")
    shuffled = sorted(page_nos)
    random.Random(seed).shuffle(shuffled)
    n_train = int(ratio * len(shuffled) + 0.5)
    n_train = min(max(n_train, 0), len(shuffled))
    return sorted(shuffled[:n_train]), sorted(shuffled[n_train:])


def format_label_line(polygon, width: int, height: int, class_id: int = 0) -> str:
    coords = []
    for x, y in polygon:
        coords.append(f"{min(max(x / width, 0.0), 1.0):.6f}")
        coords.append(f"{min(max(y / height, 0.0), 1.0):.6f}")
    return " ".join([str(class_id)] + coords)


def export_yolo(
    root: str | Path,
    project: Project,
    split_ratio: float = 0.8,
    seed: int = 42,
    out_dir: str | Path | None = None,
) -> Path:
    """Write the accepted detections of a project as a training dataset."""
    store = ProjectStore.open(root, project.id)
    sets = load_detection_sets(store)
    pages = {p.page_no: p for p in project.pages}

    per_page: dict[int, list] = {}
    for page_no, detset in sets.items():
        kept = [d for d in detset.detections if d.review in ("accepted", "edited")]
        if kept:
            per_page[page_no] = kept
    if not per_page:
        raise EmptyDatasetError(f"project {project.id!r} has no accepted detections")

    out = Path(out_dir) if out_dir else store.exports_dir / "yolo"
    if out.exists():
        shutil.rmtree(out)
    for split in ("train", "val"):
        (out / "images" / split).mkdir(parents=True)
        (out / "labels" / split).mkdir(parents=True)

    train_pages, val_pages = split_pages(sorted(per_page), split_ratio, seed)
    membership = {n: "train" for n in train_pages}
    membership.update({n: "val" for n in val_pages})

    provenance: dict[str, dict] = {}
    for page_no, detections in sorted(per_page.items()):
        page = pages[page_no]
        split = membership[page_no]
        stem = f"page{page_no:04d}"
        shutil.copyfile(store.dir / page.file, out / "images" / split / f"{stem}.png")
        lines = [
            format_label_line(d.polygon, page.width, page.height) for d in detections
        ]
        (out / "labels" / split / f"{stem}.txt").write_bytes(
            ("\n".join(lines) + "\n").encode("ascii")
        )
        provenance[stem] = {
            "page_no": page_no,
            "split": split,
            "instances": [
                {"id": d.id, "origin": d.origin, "review": d.review} for d in detections
            ],
        }

    atomic_write_json(out / "provenance.json", provenance)
    # data.yaml is written last as the commit marker
    payload = {
        "path": str(out),
        "train": "images/train",
        "val": "images/val",
        "nc": 1,
        "names": [CLASS_NAME],
    }
    (out / "data.yaml").write_text(
        yaml.safe_dump(payload, sort_keys=False), encoding="utf-8"
    )
    return out


def parse_yolo_labels(dataset_dir: str | Path) -> dict[str, list]:
    """Read a dataset back into per-image pixel polygons.

    Returns ``{image_stem: [polygon, ...]}`` with polygons as ``[(x, y), ...]``
    denormalized through each image's recorded dimensions.
    """
    dataset_dir = Path(dataset_dir)
    if not (dataset_dir / "data.yaml").is_file():
        raise LabelParseError("data.yaml missing", str(dataset_dir / "data.yaml"), 0)
    out: dict[str, list] = {}
    for split in ("train", "val"):
        labels_dir = dataset_dir / "labels" / split
        if not labels_dir.is_dir():
            continue
        for label_path in sorted(labels_dir.glob("*.txt")):
            stem = label_path.stem
            image_path = dataset_dir / "images" / split / f"{stem}.png"
            if not image_path.is_file():
                raise LabelParseError("image for label file missing", str(label_path), 0)
            with Image.open(image_path) as im:
                width, height = im.size
            polygons = []
            with open(label_path, encoding="ascii") as handle:
                for line_no, line in enumerate(handle, start=1):
                    line = line.strip()
                    if not line:
                        continue
                    parts = line.split()
                    try:
                        class_id = int(parts[0])
                        values = [float(v) for v in parts[1:]]
                    except ValueError as exc:
                        raise LabelParseError(
                            f"bad number: {exc}", str(label_path), line_no
                        ) from exc
                    if class_id != 0:
                        raise LabelParseError(
                            f"unexpected class id {class_id}", str(label_path), line_no
                        )
                    if len(values) % 2:
                        raise LabelParseError(
                            "odd coordinate count", str(label_path), line_no
                        )
                    if len(values) < 6:
                        raise LabelParseError(
                            "polygon needs at least 3 vertices", str(label_path), line_no
                        )
                    if any(not 0.0 <= v <= 1.0 for v in values):
                        raise LabelParseError(
                            "coordinate outside [0, 1]", str(label_path), line_no
                        )
                    polygons.append(
                        [
                            (values[i] * width, values[i + 1] * height)
                            for i in range(0, len(values), 2)
                        ]
                    )
            out[stem] = polygons
    return out
