#!/usr/bin/env python3
"""Build test fixtures for the review console.

* ``tests/fixtures/flips.json`` — 10 cards with head probabilities and the
  pixel output of the engine's own canonicalization path (the fidelity
  target for the client-side preview).
* ``tests/fixtures/ws`` — a small project workspace with 50 detections, used
  by the integration tests against the live HTTP facade.
"""

import json
import shutil
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from platelens.cards import canonical_flips, decide_labels, HeadPrediction
from platelens.detect import InferenceParams, detect_project
from platelens.ingest import ingest_images
from platelens.raster import flip

HERE = Path(__file__).resolve().parent.parent
FIXTURES = HERE / "tests" / "fixtures"


def flip_fixtures(rng):
    cases = []
    for i in range(10):
        h, w = int(rng.integers(5, 12)), int(rng.integers(5, 12))
        card = rng.integers(0, 256, size=(h, w, 4)).astype(np.uint8)
        heads = HeadPrediction(
            type_p=float(rng.random()),
            position_p=float(rng.random()),
            rotation_p=float(rng.random()),
        )
        labels = decide_labels(heads)
        vertical, horizontal = canonical_flips(labels)
        expected = flip(card, vertical=vertical, horizontal=horizontal)
        cases.append(
            {
                "name": f"card{i:02d}",
                "width": w,
                "height": h,
                "data": card.reshape(-1).tolist(),
                "heads": {
                    "type_p": heads.type_p,
                    "position_p": heads.position_p,
                    "rotation_p": heads.rotation_p,
                },
                "labels": labels.to_json(),
                "expected": expected.reshape(-1).tolist(),
            }
        )
    (FIXTURES / "flips.json").write_text(json.dumps(cases))
    print(f"wrote {FIXTURES / 'flips.json'}")


class GridBackend:
    backend_id = "fixture-grid"

    def infer(self, page_no, image=None):
        rows = []
        for k in range(10):
            x0 = 4 + (k % 5) * 18
            y0 = 6 + (k // 5) * 40
            rows.append(
                (
                    [[x0, y0], [x0 + 14, y0], [x0 + 14, y0 + 30], [x0, y0 + 30]],
                    0.95 - 0.01 * k,
                )
            )
        return rows


def integration_workspace(rng):
    ws = FIXTURES / "ws"
    if ws.exists():
        shutil.rmtree(ws)
    src = FIXTURES / "src"
    if src.exists():
        shutil.rmtree(src)
    src.mkdir(parents=True)
    for i in range(5):
        page = np.full((96, 96, 3), 244, np.uint8)
        page[10:80, 5:90] = rng.integers(30, 90, size=(70, 85, 3)).astype(np.uint8)
        Image.fromarray(page).save(src / f"{i}.png")
    project, _ = ingest_images(src, ws, "fixture")
    params = InferenceParams(
        conf_threshold=0.2, dilation_radius=0, fill_holes=False, min_area_px=0
    )
    sets = detect_project(ws, project, GridBackend(), params)
    total = sum(len(s.detections) for s in sets.values())
    print(f"workspace at {ws} with {total} detections")


def main():
    FIXTURES.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(20240809)
    flip_fixtures(rng)
    integration_workspace(rng)
    return 0


if __name__ == "__main__":
    sys.exit(main())
