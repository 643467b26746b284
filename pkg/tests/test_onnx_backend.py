import numpy as np
import pytest

from platelens.errors import BackendUnavailableError
from platelens.geometry import polygon_bbox
from platelens.onnx_backend import ModelBackend, box_nms, letterbox, load_model_backend


class Meta:
    def __init__(self, name, shape):
        self.name = name
        self.shape = shape


class FakeSession:
    """Duck-typed inference session serving canned tensors."""

    def __init__(self, preds, protos, input_shape=(1, 3, 64, 64)):
        self.preds = preds
        self.protos = protos
        self.input_shape = input_shape
        self.calls = 0

    def get_inputs(self):
        return [Meta("images", list(self.input_shape))]

    def get_outputs(self):
        return [
            Meta("preds", [1, self.preds.shape[1], self.preds.shape[2]]),
            Meta("protos", list(self.protos.shape)),
        ]

    def run(self, _outputs, feed):
        assert "images" in feed
        self.calls += 1
        return [self.preds, self.protos]


def square_proto_session(score=0.9):
    """One anchor whose mask prototype lights a centered square."""
    protos = np.full((1, 2, 16, 16), -10.0, dtype=np.float32)
    protos[0, 0, 4:12, 4:12] = 10.0
    # anchor: center (32,32), size 32x32, score, coeffs pick proto 0
    rows = np.array([32, 32, 32, 32, score, 1.0, 0.0], dtype=np.float32)
    preds = rows.reshape(1, 7, 1)
    return FakeSession(preds, protos)


class TestValidation:
    def test_accepts_well_formed(self):
        backend = ModelBackend(square_proto_session())
        assert (backend.input_h, backend.input_w) == (64, 64)
        assert backend.num_protos == 2

    def test_wrong_output_arity(self):
        session = square_proto_session()
        session.get_outputs = lambda: [Meta("preds", [1, 7, 1])]
        with pytest.raises(BackendUnavailableError, match="2 outputs"):
            ModelBackend(session)

    def test_dynamic_input_rejected(self):
        session = square_proto_session()
        session.input_shape = (1, 3, "height", "width")
        with pytest.raises(BackendUnavailableError, match="static"):
            ModelBackend(session)

    def test_head_width_mismatch(self):
        session = square_proto_session()
        session.preds = np.zeros((1, 9, 1), dtype=np.float32)  # 9 != 5 + nm(2)
        with pytest.raises(BackendUnavailableError, match="5 \\+ nm"):
            ModelBackend(session)


class TestInference:
    def test_decodes_square_instance(self):
        backend = ModelBackend(square_proto_session())
        page = np.full((64, 64, 3), 255, dtype=np.uint8)
        results = backend.infer(1, page)
        assert len(results) == 1
        polygon, score = results[0]
        assert score == pytest.approx(0.9, abs=1e-6)
        box = polygon_bbox(polygon)
        # proto square spans 4..12 of 16 -> 16..48 of 64, equal to the box
        assert (box.x_min, box.y_min, box.x_max, box.y_max) == (16, 16, 48, 48)

    def test_deterministic(self):
        backend = ModelBackend(square_proto_session())
        page = np.full((64, 64, 3), 255, dtype=np.uint8)
        a = backend.infer(1, page)
        b = backend.infer(1, page)
        assert np.array_equal(a[0][0], b[0][0])
        assert a[0][1] == b[0][1]

    def test_score_floor(self):
        backend = ModelBackend(square_proto_session(score=0.001))
        page = np.full((64, 64, 3), 255, dtype=np.uint8)
        assert backend.infer(1, page) == []

    def test_four_instances_decode(self):
        protos = np.full((1, 1, 16, 16), 10.0, dtype=np.float32)
        anchors = []
        for cx, cy in ((12, 12), (52, 12), (12, 52), (52, 52)):
            anchors.append([cx, cy, 12, 12, 0.8, 1.0])
        preds = np.array(anchors, dtype=np.float32).T.reshape(1, 6, 4)
        backend = ModelBackend(FakeSession(preds, protos))
        page = np.full((64, 64, 3), 255, dtype=np.uint8)
        results = backend.infer(1, page)
        assert len(results) >= 4

    def test_nms_collapses_duplicates(self):
        protos = np.full((1, 1, 16, 16), 10.0, dtype=np.float32)
        anchors = [[32, 32, 20, 20, 0.9, 1.0], [33, 32, 20, 20, 0.8, 1.0]]
        preds = np.array(anchors, dtype=np.float32).T.reshape(1, 6, 2)
        backend = ModelBackend(FakeSession(preds, protos))
        page = np.full((64, 64, 3), 255, dtype=np.uint8)
        assert len(backend.infer(1, page)) == 1


class TestHelpers:
    def test_letterbox_geometry(self):
        image = np.zeros((50, 100, 3), dtype=np.uint8)
        canvas, scale, pad_x, pad_y = letterbox(image, 64, 64)
        assert canvas.shape == (64, 64, 3)
        assert scale == pytest.approx(0.64)
        assert (pad_x, pad_y) == (0, 16)
        assert (canvas[0] == 114).all()  # padding rows
        assert (canvas[16] == 0).all()  # image rows

    def test_nms_keeps_distant(self):
        boxes = np.array([[0, 0, 10, 10], [50, 50, 60, 60]], dtype=float)
        scores = np.array([0.9, 0.8])
        assert box_nms(boxes, scores, 0.5) == [0, 1]

    def test_nms_order_by_score(self):
        boxes = np.array([[0, 0, 10, 10], [1, 0, 11, 10]], dtype=float)
        scores = np.array([0.5, 0.9])
        assert box_nms(boxes, scores, 0.5) == [1]


class TestLoadModelBackend:
    def test_missing_file(self, tmp_path):
        with pytest.raises(BackendUnavailableError, match="no such model"):
            load_model_backend(tmp_path / "absent.onnx")

    def test_missing_runtime_or_bad_model(self, tmp_path):
        # without onnxruntime installed this reports the runtime; with it,
        # the junk bytes fail at session build -- unavailable either way
        bogus = tmp_path / "model.onnx"
        bogus.write_bytes(b"\x00\x01junk")
        with pytest.raises(BackendUnavailableError):
            load_model_backend(bogus)
