"""Vector geometry primitives: boxes, polygons, rasterization, contour tracing.

Masks are plain ``numpy`` bool arrays of shape ``(height, width)`` indexed
``[y, x]``; polygons are float arrays of shape ``(n, 2)`` holding ``(x, y)``
vertices in the image frame (origin top-left, y growing downward), implicitly
closed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AmbiguousInputError, InvalidGeometryError


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box in continuous pixel coordinates."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise InvalidGeometryError(
                f"inverted box ({self.x_min},{self.y_min},{self.x_max},{self.y_max})"
            )

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height


def as_polygon(vertices) -> np.ndarray:
    """Validate and canonicalize a vertex list into an ``(n, 2)`` float array.

    An explicitly closed ring (last vertex == first) is tolerated and the
    duplicate is dropped.  Raises :class:`InvalidGeometryError` for fewer than
    3 vertices or identical consecutive vertices (the closing pair included).
    """
    poly = np.asarray(vertices, dtype=float)
    if poly.ndim != 2 or poly.shape[1] != 2:
        raise InvalidGeometryError(f"expected (n, 2) vertices, got shape {poly.shape}")
    if len(poly) >= 4 and np.array_equal(poly[0], poly[-1]):
        poly = poly[:-1]
    if len(poly) < 3:
        raise InvalidGeometryError(f"polygon needs >= 3 vertices, got {len(poly)}")
    if not np.isfinite(poly).all():
        raise InvalidGeometryError("polygon has non-finite coordinates")
    same = np.all(poly == np.roll(poly, -1, axis=0), axis=1)
    if same.any():
        raise InvalidGeometryError("polygon repeats consecutive vertices")
    return normalize_winding(poly)


def shoelace(poly: np.ndarray) -> float:
    """Signed shoelace sum; negative for rings counterclockwise on screen."""
    x, y = poly[:, 0], poly[:, 1]
    x2, y2 = np.roll(x, -1), np.roll(y, -1)
    return 0.5 * float(np.sum(x * y2 - x2 * y))


def polygon_area(poly: np.ndarray) -> float:
    return abs(shoelace(poly))


def normalize_winding(poly: np.ndarray) -> np.ndarray:
    """Canonical winding: counterclockwise on screen (negative shoelace)."""
    if shoelace(poly) > 0:
        return poly[::-1].copy()
    return poly


def polygon_bbox(poly: np.ndarray) -> BBox:
    """Tight bounding box of a polygon."""
    return BBox(
        float(poly[:, 0].min()),
        float(poly[:, 1].min()),
        float(poly[:, 0].max()),
        float(poly[:, 1].max()),
    )


def rasterize_polygon(poly, width: int, height: int) -> np.ndarray:
    """Rasterize a polygon with the pixel-center even-odd rule.

    Pixel ``(i, j)`` is set iff its center ``(i + 0.5, j + 0.5)`` lies inside
    the polygon; each horizontal span uses half-open ``[left, right)`` bounds
    so boundary-sitting centers resolve the same way a crossing-count
    point-in-polygon test does.  Pixels outside the canvas are clipped.
    """
    poly = as_polygon(poly)
    if width < 1 or height < 1:
        raise InvalidGeometryError(f"canvas {width}x{height} is empty")
    mask = np.zeros((height, width), dtype=bool)

    xa, ya = poly[:, 0], poly[:, 1]
    xb, yb = np.roll(xa, -1), np.roll(ya, -1)
    ylo, yhi = np.minimum(ya, yb), np.maximum(ya, yb)

    j0 = max(0, int(math.floor(ylo.min() - 0.5)))
    j1 = min(height, int(math.ceil(yhi.max())))
    for j in range(j0, j1):
        cy = j + 0.5
        hit = (ylo <= cy) & (cy < yhi)
        if not hit.any():
            continue
        t = (cy - ya[hit]) / (yb[hit] - ya[hit])
        crossings = np.sort(xa[hit] + t * (xb[hit] - xa[hit]))
        for k in range(0, len(crossings) - 1, 2):
            left, right = crossings[k], crossings[k + 1]
            i0 = max(0, int(math.ceil(left - 0.5)))
            i1 = min(width, int(math.ceil(right - 0.5)))
            if i1 > i0:
                mask[j, i0:i1] = True
    return mask


# Crack directions: walking with the set region on the walker's right.
_LEFT_OF = {(1, 0): (0, -1), (0, -1): (-1, 0), (-1, 0): (0, 1), (0, 1): (1, 0)}
_RIGHT_OF = {v: k for k, v in _LEFT_OF.items()}


def _boundary_cracks(mask: np.ndarray) -> dict:
    """Directed pixel-edge segments of the region boundary, keyed by start vertex.

    Each set pixel contributes one directed segment per side whose neighbor is
    unset, oriented so that consecutive segments chain around the region.
    """
    h, w = mask.shape
    padded = np.zeros((h + 2, w + 2), dtype=bool)
    padded[1:-1, 1:-1] = mask
    ys, xs = np.nonzero(mask)
    out: dict[tuple[int, int], list[tuple[int, int]]] = {}

    def add(ax, ay, bx, by):
        out.setdefault((ax, ay), []).append((bx, by))

    for y, x in zip(ys.tolist(), xs.tolist()):
        py, px = y + 1, x + 1
        if not padded[py - 1, px]:  # top side, walk +x
            add(x, y, x + 1, y)
        if not padded[py, px + 1]:  # right side, walk +y
            add(x + 1, y, x + 1, y + 1)
        if not padded[py + 1, px]:  # bottom side, walk -x
            add(x + 1, y + 1, x, y + 1)
        if not padded[py, px - 1]:  # left side, walk -y
            add(x, y + 1, x, y)
    return out


def _merge_collinear(vertices: list[tuple[int, int]]) -> np.ndarray:
    """Drop vertices whose neighbors are collinear (exact integer test)."""
    n = len(vertices)
    keep = []
    for i in range(n):
        ax, ay = vertices[i - 1]
        bx, by = vertices[i]
        cx, cy = vertices[(i + 1) % n]
        if (bx - ax) * (cy - by) - (by - ay) * (cx - bx) != 0:
            keep.append(vertices[i])
    return np.array(keep, dtype=float)


def trace_contour(mask: np.ndarray) -> np.ndarray:
    """Trace the outer boundary of a single-component mask as a polygon.

    Walks the cracks between set and unset pixels.  At pinch vertices (two
    pixels touching only diagonally) the walk turns away from the region it is
    hugging, which keeps 8-connected components on a single loop.  Collinear
    lattice vertices are merged exactly.  Holes are ignored: the result is the
    outer ring, so round-tripping through :func:`rasterize_polygon` reproduces
    the hole-filled input.
    """
    from .morphology import connected_components  # cycle-free at call time

    if not mask.any():
        raise InvalidGeometryError("cannot trace an empty mask")
    if len(connected_components(mask, connectivity=8)) != 1:
        raise AmbiguousInputError("mask has more than one 8-connected component")

    cracks = _boundary_cracks(mask)
    ys, xs = np.nonzero(mask)
    first = int(np.argmin(ys * mask.shape[1] + xs))
    sx, sy = int(xs[first]), int(ys[first])
    # Top edge of the topmost-leftmost pixel always lies on the outer ring.
    start = ((sx, sy), (sx + 1, sy))

    vertices = [start[0]]
    a, b = start
    while b != start[0]:
        vertices.append(b)
        nexts = cracks[b]
        if len(nexts) == 1:
            a, b = b, nexts[0]
            continue
        dx, dy = b[0] - a[0], b[1] - a[1]
        # Pinch vertex: prefer the screen-left turn, then straight, then right.
        for step in (_LEFT_OF[(dx, dy)], (dx, dy), _RIGHT_OF[(dx, dy)]):
            cand = (b[0] + step[0], b[1] + step[1])
            if cand in nexts:
                a, b = b, cand
                break
        else:  # pragma: no cover - cracks always chain
            raise InvalidGeometryError("boundary walk broke")
    return normalize_winding(_merge_collinear(vertices))
