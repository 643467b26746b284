"""Detection backend running an exported single-class segmentation network.

The expected interchange file is an ONNX export with one image input
``(1, 3, H, W)`` (static spatial size; the backend honors the embedded
geometry) and two outputs:

* predictions ``(1, 5 + nm, anchors)`` — box center/size in input pixels,
  one class score, ``nm`` mask coefficients;
* prototypes ``(1, nm, mh, mw)``.

Instance masks are ``sigmoid(coefficients @ prototypes)`` cropped to the
predicted box.  The backend applies its own score floor and box NMS before
handing polygons to the pipeline.  All load-time problems raise
:class:`BackendUnavailableError`; ``infer`` never does.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import BackendUnavailableError
from .geometry import trace_contour
from .morphology import connected_components

SCORE_FLOOR = 0.01
NMS_IOU = 0.7
MASK_THRESHOLD = 0.5
PAD_VALUE = 114


def letterbox(image: np.ndarray, target_h: int, target_w: int):
    """Aspect-preserving resize onto a padded canvas; returns placement too."""
    h, w = image.shape[:2]
    scale = min(target_h / h, target_w / w)
    new_h, new_w = max(1, round(h * scale)), max(1, round(w * scale))
    ys = np.minimum((np.arange(new_h) / scale).astype(np.int64), h - 1)
    xs = np.minimum((np.arange(new_w) / scale).astype(np.int64), w - 1)
    resized = image[ys][:, xs]
    canvas = np.full((target_h, target_w, 3), PAD_VALUE, dtype=np.uint8)
    pad_y = (target_h - new_h) // 2
    pad_x = (target_w - new_w) // 2
    canvas[pad_y : pad_y + new_h, pad_x : pad_x + new_w] = resized
    return canvas, scale, pad_x, pad_y


def box_nms(boxes: np.ndarray, scores: np.ndarray, iou_limit: float) -> list[int]:
    """Greedy NMS on xyxy boxes, highest score first."""
    order = np.argsort(-scores, kind="stable")
    keep: list[int] = []
    for i in order:
        x0, y0, x1, y1 = boxes[i]
        area_i = max(0.0, x1 - x0) * max(0.0, y1 - y0)
        ok = True
        for j in keep:
            u0, v0, u1, v1 = boxes[j]
            iw = max(0.0, min(x1, u1) - max(x0, u0))
            ih = max(0.0, min(y1, v1) - max(y0, v0))
            inter = iw * ih
            area_j = max(0.0, u1 - u0) * max(0.0, v1 - v0)
            union = area_i + area_j - inter
            if union > 0 and inter / union > iou_limit:
                ok = False
                break
        if ok:
            keep.append(int(i))
    return keep


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(x, -60, 60)))


def _static_dims(shape) -> list[int] | None:
    dims = []
    for d in shape:
        if not isinstance(d, int) or d <= 0:
            return None
        dims.append(d)
    return dims


class ModelBackend:
    """Wraps an inference session implementing get_inputs/get_outputs/run."""

    needs_pixels = True

    def __init__(self, session, backend_id: str = "model"):
        self.session = session
        self.backend_id = backend_id
        inputs = session.get_inputs()
        outputs = session.get_outputs()
        if len(inputs) != 1:
            raise BackendUnavailableError(
                f"expected a single image input, model has {len(inputs)}"
            )
        if len(outputs) != 2:
            raise BackendUnavailableError(
                f"expected 2 outputs (predictions, prototypes), model has {len(outputs)}"
            )
        in_dims = _static_dims(inputs[0].shape)
        if in_dims is None or len(in_dims) != 4 or in_dims[1] != 3:
            raise BackendUnavailableError(
                f"input must be static (1, 3, H, W), got {inputs[0].shape}"
            )
        self.input_name = inputs[0].name
        self.input_h, self.input_w = in_dims[2], in_dims[3]

        pred_dims = _static_dims(outputs[0].shape)
        proto_dims = _static_dims(outputs[1].shape)
        if proto_dims is None or len(proto_dims) != 4:
            raise BackendUnavailableError(
                f"prototype output must be static (1, nm, mh, mw), got {outputs[1].shape}"
            )
        self.num_protos = proto_dims[1]
        if pred_dims is None or len(pred_dims) != 3 or pred_dims[1] != 5 + self.num_protos:
            raise BackendUnavailableError(
                "prediction output must be (1, 5 + nm, anchors) for a single class; "
                f"got {outputs[0].shape} with nm={self.num_protos}"
            )

    def infer(self, page_no: int, image: np.ndarray):
        if image is None:
            raise ValueError("model backend needs page pixels")
        boxed, scale, pad_x, pad_y = letterbox(image, self.input_h, self.input_w)
        tensor = boxed.astype(np.float32).transpose(2, 0, 1)[None] / 255.0
        preds, protos = self.session.run(None, {self.input_name: tensor})
        preds = np.asarray(preds)[0]  # (5 + nm, anchors)
        protos = np.asarray(protos)[0]  # (nm, mh, mw)

        scores = preds[4]
        live = np.flatnonzero(scores >= SCORE_FLOOR)
        if live.size == 0:
            return []
        cx, cy, bw, bh = preds[0, live], preds[1, live], preds[2, live], preds[3, live]
        boxes = np.stack([cx - bw / 2, cy - bh / 2, cx + bw / 2, cy + bh / 2], axis=1)
        coeffs = preds[5:, live].T
        live_scores = scores[live]

        keep = box_nms(boxes, live_scores, NMS_IOU)
        results = []
        mh, mw = protos.shape[1:]
        flat_protos = protos.reshape(self.num_protos, -1)
        for i in keep:
            mask_small = _sigmoid(coeffs[i] @ flat_protos).reshape(mh, mw)
            polygon = self._mask_to_polygon(
                mask_small, boxes[i], image.shape[:2], scale, pad_x, pad_y
            )
            if polygon is not None:
                results.append((polygon, float(live_scores[i])))
        return results

    def _mask_to_polygon(self, mask_small, box, page_shape, scale, pad_x, pad_y):
        page_h, page_w = page_shape
        x0, y0, x1, y1 = box
        # box in page coordinates, clipped
        px0 = max(0, int(np.floor((x0 - pad_x) / scale)))
        py0 = max(0, int(np.floor((y0 - pad_y) / scale)))
        px1 = min(page_w, int(np.ceil((x1 - pad_x) / scale)))
        py1 = min(page_h, int(np.ceil((y1 - pad_y) / scale)))
        if px1 <= px0 or py1 <= py0:
            return None
        mh, mw = mask_small.shape
        # sample the prototype grid at page-pixel centers inside the box
        ys = ((np.arange(py0, py1) + 0.5) * scale + pad_y) * (mh / self.input_h)
        xs = ((np.arange(px0, px1) + 0.5) * scale + pad_x) * (mw / self.input_w)
        rows = np.clip(ys.astype(np.int64), 0, mh - 1)
        cols = np.clip(xs.astype(np.int64), 0, mw - 1)
        window = mask_small[rows][:, cols] > MASK_THRESHOLD
        if not window.any():
            return None
        full = np.zeros((page_h, page_w), dtype=bool)
        full[py0:py1, px0:px1] = window
        parts = connected_components(full, connectivity=8)
        return trace_contour(parts[0])


def load_model_backend(model_file: str | Path, device: str = "cpu") -> ModelBackend:
    """Open an exported network file with onnxruntime."""
    model_file = Path(model_file)
    if not model_file.is_file():
        raise BackendUnavailableError(f"{model_file}: no such model file")
    try:
        import onnxruntime  # noqa: PLC0415 - optional heavyweight dependency
    except ImportError as exc:
        raise BackendUnavailableError(
            "onnxruntime is not installed; install it or use the oracle backend"
        ) from exc
    providers = (
        ["CUDAExecutionProvider", "CPUExecutionProvider"]
        if device == "cuda"
        else ["CPUExecutionProvider"]
    )
    try:
        session = onnxruntime.InferenceSession(str(model_file), providers=providers)
    except Exception as exc:
        raise BackendUnavailableError(f"{model_file}: {exc}") from exc
    return ModelBackend(session, backend_id=f"model:{model_file.name}")
