"""Raster image helpers: flips, alpha extraction, PNG round-trips.

Images are ``numpy`` uint8 arrays of shape ``(height, width, channels)`` with
3 (RGB) or 4 (RGBA) channels; binary masks are bool arrays ``(height, width)``.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .errors import InvalidGeometryError, InvalidInputError


def flip(image: np.ndarray, vertical: bool = False, horizontal: bool = False) -> np.ndarray:
    """Mirror an image or mask along the requested axes; dimensions unchanged."""
    out = image
    if vertical:
        out = out[::-1]
    if horizontal:
        out = out[:, ::-1]
    return out.copy()


def crop_with_alpha(page: np.ndarray, mask: np.ndarray, padding: int = 0) -> np.ndarray:
    """Cut the mask's padded bounding box out of a page as an RGBA image.

    Alpha is opaque exactly on mask pixels, so the opaque-pixel count equals
    the mask cardinality regardless of padding.
    """
    if padding < 0:
        raise InvalidInputError(f"padding must be >= 0, got {padding}")
    if page.shape[:2] != mask.shape:
        raise InvalidInputError(
            f"page {page.shape[:2]} and mask {mask.shape} dimensions differ"
        )
    if not mask.any():
        raise InvalidGeometryError("cannot crop an empty mask")

    ys, xs = np.nonzero(mask)
    y0 = max(0, int(ys.min()) - padding)
    y1 = min(mask.shape[0], int(ys.max()) + 1 + padding)
    x0 = max(0, int(xs.min()) - padding)
    x1 = min(mask.shape[1], int(xs.max()) + 1 + padding)

    rgb = to_rgb(page)[y0:y1, x0:x1]
    alpha = np.where(mask[y0:y1, x0:x1], 255, 0).astype(np.uint8)
    return np.dstack([rgb, alpha])


def to_rgb(image: np.ndarray) -> np.ndarray:
    """Promote grayscale/RGBA arrays to plain RGB."""
    if image.ndim == 2:
        return np.repeat(image[:, :, None], 3, axis=2)
    if image.shape[2] == 4:
        return image[:, :, :3]
    if image.shape[2] == 3:
        return image
    raise InvalidInputError(f"unsupported channel count {image.shape[2]}")


def load_image(path: str | Path) -> np.ndarray:
    """Read an image file into an RGB or RGBA uint8 array."""
    with Image.open(path) as im:
        if im.mode not in ("RGB", "RGBA"):
            im = im.convert("RGBA" if "A" in im.mode or "P" in im.mode else "RGB")
        return np.asarray(im)


def save_png(image: np.ndarray, path: str | Path) -> None:
    """Write an array as a PNG (lossless)."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    if image.ndim == 2 and image.dtype == bool:
        image = np.where(image, 255, 0).astype(np.uint8)
    Image.fromarray(image).save(path, format="PNG")
