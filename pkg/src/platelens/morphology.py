"""Binary mask morphology: dilation, erosion, hole filling, labeling.

All operations treat pixels outside the canvas as unset and use a square
(Chebyshev) structuring element of side ``2 * radius + 1``.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .errors import InvalidInputError

_CROSS = ndimage.generate_binary_structure(2, 1)
_SQUARE = ndimage.generate_binary_structure(2, 2)


def _check_radius(radius: int) -> int:
    if radius < 0 or int(radius) != radius:
        raise InvalidInputError(f"radius must be a non-negative integer, got {radius}")
    return int(radius)


def dilate(mask: np.ndarray, radius: int) -> np.ndarray:
    """Set every pixel within Chebyshev distance ``radius`` of a set pixel."""
    radius = _check_radius(radius)
    if radius == 0:
        return mask.copy()
    out = ndimage.maximum_filter(
        mask.astype(np.uint8), size=2 * radius + 1, mode="constant", cval=0
    )
    return out.astype(bool)


def erode(mask: np.ndarray, radius: int) -> np.ndarray:
    """Keep a pixel only if its full square neighborhood is set.

    Off-canvas pixels count as unset, so the canvas border erodes.
    """
    radius = _check_radius(radius)
    if radius == 0:
        return mask.copy()
    out = ndimage.minimum_filter(
        mask.astype(np.uint8), size=2 * radius + 1, mode="constant", cval=0
    )
    return out.astype(bool)


def fill_holes(mask: np.ndarray) -> np.ndarray:
    """Set every unset pixel not 4-connected to the canvas border."""
    return ndimage.binary_fill_holes(mask, structure=_CROSS)


def connected_components(mask: np.ndarray, connectivity: int = 8) -> list[np.ndarray]:
    """Split a mask into its connected components.

    Returns disjoint masks whose union is the input, ordered by descending
    pixel count with ties broken by the topmost-then-leftmost first pixel.
    """
    if connectivity not in (4, 8):
        raise InvalidInputError(f"connectivity must be 4 or 8, got {connectivity}")
    structure = _CROSS if connectivity == 4 else _SQUARE
    labels, count = ndimage.label(mask, structure=structure)
    if count == 0:
        return []
    sizes = ndimage.sum_labels(mask, labels, index=range(1, count + 1))
    flat = labels.ravel()
    first_seen = np.full(count + 1, flat.size, dtype=np.int64)
    nz = np.flatnonzero(flat)
    # reversed assignment keeps the first (row-major smallest) index per label
    first_seen[flat[nz[::-1]]] = nz[::-1]
    order = sorted(range(1, count + 1), key=lambda k: (-sizes[k - 1], first_seen[k]))
    return [labels == k for k in order]
