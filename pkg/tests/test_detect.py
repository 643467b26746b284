import json

import numpy as np
import pytest
from PIL import Image

from platelens.detect import (
    Detection,
    DetectionSet,
    InferenceParams,
    accepted_detections,
    delete_detection,
    detect_project,
    load_detection_sets,
    load_oracle_predictions,
    run_detection,
    save_detection_sets,
    set_review,
    upsert_manual_detection,
)
from platelens.errors import (
    DetectionError,
    InvalidGeometryError,
    NotFoundError,
    SchemaError,
)
from platelens.geometry import rasterize_polygon
from platelens.ingest import PageImage, ingest_images
from platelens.metrics import iou
from platelens.storage import ProjectStore


def page_meta(page_no=1, width=64, height=64):
    return PageImage(page_no=page_no, width=width, height=height, dpi=300, file="", checksum="")


class StubBackend:
    backend_id = "stub"

    def __init__(self, rows):
        self.rows = rows

    def infer(self, page_no, image=None):
        return self.rows


class FailingBackend:
    backend_id = "boom"

    def infer(self, page_no, image=None):
        raise RuntimeError("out of llama memory")


TRIANGLE = [(5, 5), (40, 8), (20, 45)]
SQUARE = [(10, 10), (30, 10), (30, 30), (10, 30)]
BLOB = [(2, 20), (18, 2), (45, 12), (50, 40), (25, 55), (6, 44)]


def relaxed(**kw):
    defaults = dict(conf_threshold=0.25, dilation_radius=0, fill_holes=False, min_area_px=0)
    defaults.update(kw)
    return InferenceParams(**defaults)


def test_default_min_area_scales_with_density():
    from platelens.detect import default_min_area

    assert default_min_area(300) == 64
    assert default_min_area(150) == 16
    assert default_min_area(600) == 256


class TestRunDetection:
    def test_confidence_filter(self):
        backend = StubBackend([(TRIANGLE, 0.9), (SQUARE, 0.5), (BLOB, 0.1)])
        result = run_detection(page_meta(), None, backend, relaxed(conf_threshold=0.4))
        assert len(result.detections) == 2

    def test_threshold_zero_keeps_all(self):
        backend = StubBackend([(TRIANGLE, 0.9), (SQUARE, 0.5), (BLOB, 0.1)])
        result = run_detection(page_meta(), None, backend, relaxed(conf_threshold=0.0))
        assert len(result.detections) == 3

    def test_monotone_in_threshold(self):
        backend = StubBackend([(TRIANGLE, 0.8), (SQUARE, 0.45), (BLOB, 0.2)])
        counts = [
            len(run_detection(page_meta(), None, backend, relaxed(conf_threshold=t)).detections)
            for t in (0.0, 0.3, 0.5, 0.9)
        ]
        assert counts == sorted(counts, reverse=True)

    def test_identity_postprocess_round_trips(self):
        backend = StubBackend([(TRIANGLE, 0.9), (BLOB, 0.8)])
        result = run_detection(page_meta(), None, backend, relaxed())
        assert len(result.detections) == 2
        for det, (poly, _) in zip(result.detections, backend.rows):
            raw_mask = rasterize_polygon(poly, 64, 64)
            out_mask = det.mask(64, 64)
            assert iou(raw_mask, out_mask) >= 0.99

    def test_dilation_gives_supersets(self):
        backend = StubBackend([(TRIANGLE, 0.9), (SQUARE, 0.9)])
        result = run_detection(page_meta(), None, backend, relaxed(dilation_radius=2))
        for det, (poly, _) in zip(result.detections, backend.rows):
            raw_mask = rasterize_polygon(poly, 64, 64)
            out_mask = det.mask(64, 64)
            assert (raw_mask <= out_mask).all()

    def test_min_area_drops_specks(self):
        speck = [(1, 1), (3, 1), (3, 3), (1, 3)]
        backend = StubBackend([(speck, 0.9), (BLOB, 0.9)])
        result = run_detection(page_meta(), None, backend, relaxed(min_area_px=64))
        assert len(result.detections) == 1

    def test_params_recorded(self):
        params = relaxed(conf_threshold=0.33, dilation_radius=1)
        result = run_detection(page_meta(), None, StubBackend([]), params)
        assert result.params == params
        assert result.backend_id == "stub"
        assert result.detections == []

    def test_reproducible(self):
        backend = StubBackend([(BLOB, 0.7)])
        a = run_detection(page_meta(), None, backend, relaxed(dilation_radius=1))
        b = run_detection(page_meta(), None, backend, relaxed(dilation_radius=1))
        assert np.array_equal(a.detections[0].polygon, b.detections[0].polygon)

    def test_backend_failure(self):
        with pytest.raises(DetectionError, match="page 3") as exc:
            run_detection(page_meta(page_no=3), None, FailingBackend(), relaxed())
        assert exc.value.page_no == 3


class TestOracleBackend:
    def write(self, tmp_path, payload):
        path = tmp_path / "preds.json"
        path.write_text(json.dumps(payload))
        return path

    def test_serves_stored_pages(self, tmp_path):
        payload = {
            "schema": 1,
            "pages": [
                {
                    "page_no": 1,
                    "detections": [
                        {"id": "p1_d1", "score": 0.9, "polygon": TRIANGLE},
                        {"id": "p1_d2", "score": 0.8, "polygon": SQUARE},
                        {"id": "p1_d3", "score": 0.7, "polygon": BLOB},
                    ],
                },
                {
                    "page_no": 2,
                    "detections": [
                        {"id": "p2_d1", "score": 0.6, "polygon": SQUARE},
                        {"id": "p2_d2", "score": 0.5, "polygon": TRIANGLE},
                    ],
                },
            ],
        }
        backend = load_oracle_predictions(self.write(tmp_path, payload))
        assert len(backend.infer(1)) == 3
        assert len(backend.infer(2)) == 2
        assert backend.infer(99) == []

    def test_degenerate_polygon_pointer(self, tmp_path):
        payload = {
            "schema": 1,
            "pages": [
                {"page_no": 1, "detections": [{"score": 0.9, "polygon": [[0, 0], [1, 1]]}]}
            ],
        }
        with pytest.raises(SchemaError) as exc:
            load_oracle_predictions(self.write(tmp_path, payload))
        assert exc.value.pointer == "/pages/0/detections/0/polygon"

    def test_score_out_of_range(self, tmp_path):
        payload = {
            "schema": 1,
            "pages": [{"page_no": 1, "detections": [{"score": 1.5, "polygon": TRIANGLE}]}],
        }
        with pytest.raises(SchemaError) as exc:
            load_oracle_predictions(self.write(tmp_path, payload))
        assert "score" in exc.value.pointer

    def test_bad_json(self, tmp_path):
        path = tmp_path / "junk.json"
        path.write_text("{nope")
        with pytest.raises(SchemaError):
            load_oracle_predictions(path)


def make_project(tmp_path, n_pages=2, size=64):
    src = tmp_path / "src"
    src.mkdir(exist_ok=True)
    for i in range(n_pages):
        Image.fromarray(np.full((size, size, 3), 240, np.uint8)).save(src / f"{i}.png")
    project, _ = ingest_images(src, tmp_path / "ws", "proj")
    return project


class TestPersistenceRoundTrip:
    def test_save_reload_rerun_identical(self, tmp_path):
        project = make_project(tmp_path)
        store = ProjectStore.open(tmp_path / "ws", "proj")
        backend = StubBackend([(BLOB, 0.7), (TRIANGLE, 0.9)])
        params = relaxed()
        first = detect_project(tmp_path / "ws", project, backend, params)

        # feed the persisted file back in as an oracle and re-run
        oracle = load_oracle_predictions(store.detections_path)
        second = {
            page.page_no: run_detection(page, None, oracle, params)
            for page in project.pages
        }
        for page_no, detset in first.items():
            redo = second[page_no]
            assert len(redo.detections) == len(detset.detections)
            for a, b in zip(detset.detections, redo.detections):
                assert np.array_equal(a.polygon, b.polygon)

    def test_load_detection_sets_round_trip(self, tmp_path):
        project = make_project(tmp_path)
        store = ProjectStore.open(tmp_path / "ws", "proj")
        detset = DetectionSet(
            page_no=1,
            detections=[Detection(id="p1_d1", page_no=1, polygon=TRIANGLE, score=0.5)],
            params=relaxed(),
            backend_id="stub",
            version=4,
        )
        save_detection_sets(store, {1: detset})
        loaded = load_detection_sets(store)
        assert loaded[1].version == 4
        assert loaded[1].backend_id == "stub"
        assert loaded[1].params == relaxed()
        assert np.array_equal(loaded[1].detections[0].polygon, detset.detections[0].polygon)


class TestManualDetections:
    def test_add_triangle(self, tmp_path):
        project = make_project(tmp_path)
        det = upsert_manual_detection(tmp_path / "ws", project, 1, TRIANGLE)
        assert det.origin == "manual"
        assert det.score == 1.0
        assert det.review == "edited"
        store = ProjectStore.open(tmp_path / "ws", "proj")
        stored = load_detection_sets(store)[1]
        assert stored.detections[0].id == det.id

    def test_add_then_delete(self, tmp_path):
        project = make_project(tmp_path)
        store = ProjectStore.open(tmp_path / "ws", "proj")
        before = load_detection_sets(store)
        det = upsert_manual_detection(tmp_path / "ws", project, 1, TRIANGLE)
        delete_detection(tmp_path / "ws", project, det.id)
        after = load_detection_sets(store)
        assert [d.id for s in after.values() for d in s.detections] == [
            d.id for s in before.values() for d in s.detections
        ]

    def test_hundred_unique_ids(self, tmp_path):
        project = make_project(tmp_path, n_pages=1)
        ids = set()
        for i in range(100):
            shift = i % 20
            poly = [(5 + shift, 5), (25 + shift, 8), (15, 30 + shift)]
            det = upsert_manual_detection(tmp_path / "ws", project, 1, poly)
            ids.add(det.id)
        assert len(ids) == 100

    def test_out_of_bounds(self, tmp_path):
        project = make_project(tmp_path)
        with pytest.raises(InvalidGeometryError):
            upsert_manual_detection(tmp_path / "ws", project, 1, [(0, 0), (90, 0), (0, 90)])

    def test_unknown_page(self, tmp_path):
        project = make_project(tmp_path)
        with pytest.raises(NotFoundError):
            upsert_manual_detection(tmp_path / "ws", project, 9, TRIANGLE)


class TestReview:
    def test_accept_and_collect(self, tmp_path):
        project = make_project(tmp_path)
        backend = StubBackend([(BLOB, 0.7), (TRIANGLE, 0.9)])
        detect_project(tmp_path / "ws", project, backend, relaxed())
        store = ProjectStore.open(tmp_path / "ws", "proj")
        sets = load_detection_sets(store)
        all_ids = [d.id for s in sets.values() for d in s.detections]
        assert set_review(tmp_path / "ws", project, all_ids[:3], "accepted") == 3
        sets = load_detection_sets(store)
        assert len(accepted_detections(sets)) == 3

    def test_version_bumps_on_review(self, tmp_path):
        project = make_project(tmp_path, n_pages=1)
        detect_project(tmp_path / "ws", project, StubBackend([(BLOB, 0.9)]), relaxed())
        store = ProjectStore.open(tmp_path / "ws", "proj")
        v0 = load_detection_sets(store)[1].version
        ids = [d.id for d in load_detection_sets(store)[1].detections]
        set_review(tmp_path / "ws", project, ids, "rejected")
        assert load_detection_sets(store)[1].version == v0 + 1

    def test_unknown_id(self, tmp_path):
        project = make_project(tmp_path)
        with pytest.raises(NotFoundError):
            set_review(tmp_path / "ws", project, ["p1_d99"], "accepted")
