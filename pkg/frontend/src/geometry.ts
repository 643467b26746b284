/* Polygon editing math for the mask overlay.  Coordinates are page pixels;
 * the overlay round-trips the server's numbers without drift. */

export type Vertex = [number, number];

export function polygonProblem(vertices: Vertex[]): string | null {
  if (vertices.length < 3) {
    return "a mask needs at least 3 vertices";
  }
  for (let i = 0; i < vertices.length; i++) {
    const [ax, ay] = vertices[i];
    const [bx, by] = vertices[(i + 1) % vertices.length];
    if (ax === bx && ay === by) {
      return "mask repeats a vertex";
    }
  }
  return null;
}

export function polygonIsValid(vertices: Vertex[]): boolean {
  return polygonProblem(vertices) === null;
}

export function dragVertex(
  vertices: Vertex[],
  index: number,
  dx: number,
  dy: number,
): Vertex[] {
  return vertices.map((v, i) =>
    i === index ? ([v[0] + dx, v[1] + dy] as Vertex) : ([v[0], v[1]] as Vertex),
  );
}

/** Insert a vertex at the midpoint of the edge starting at `edgeIndex`. */
export function insertVertex(vertices: Vertex[], edgeIndex: number): Vertex[] {
  const a = vertices[edgeIndex];
  const b = vertices[(edgeIndex + 1) % vertices.length];
  const mid: Vertex = [(a[0] + b[0]) / 2, (a[1] + b[1]) / 2];
  const out = vertices.map((v) => [v[0], v[1]] as Vertex);
  out.splice(edgeIndex + 1, 0, mid);
  return out;
}

/** Delete a vertex; refuses to go below a triangle. */
export function deleteVertex(vertices: Vertex[], index: number): Vertex[] {
  if (vertices.length <= 3) {
    return vertices;
  }
  return vertices.filter((_, i) => i !== index).map((v) => [v[0], v[1]] as Vertex);
}

export function closestVertex(
  vertices: Vertex[],
  x: number,
  y: number,
  radius: number,
): number {
  let best = -1;
  let bestDist = radius * radius;
  for (let i = 0; i < vertices.length; i++) {
    const dx = vertices[i][0] - x;
    const dy = vertices[i][1] - y;
    const d = dx * dx + dy * dy;
    if (d <= bestDist) {
      best = i;
      bestDist = d;
    }
  }
  return best;
}

export function closestEdge(
  vertices: Vertex[],
  x: number,
  y: number,
  radius: number,
): number {
  let best = -1;
  let bestDist = radius * radius;
  for (let i = 0; i < vertices.length; i++) {
    const a = vertices[i];
    const b = vertices[(i + 1) % vertices.length];
    const d = pointSegmentDistanceSq(x, y, a, b);
    if (d <= bestDist) {
      best = i;
      bestDist = d;
    }
  }
  return best;
}

function pointSegmentDistanceSq(
  x: number,
  y: number,
  a: Vertex,
  b: Vertex,
): number {
  const abx = b[0] - a[0];
  const aby = b[1] - a[1];
  const apx = x - a[0];
  const apy = y - a[1];
  const lenSq = abx * abx + aby * aby;
  const t = lenSq === 0 ? 0 : Math.max(0, Math.min(1, (apx * abx + apy * aby) / lenSq));
  const px = a[0] + t * abx - x;
  const py = a[1] + t * aby - y;
  return px * px + py * py;
}

/* Zoom/pan transform between page pixels and screen pixels. */

export interface ViewTransform {
  scale: number;
  offsetX: number;
  offsetY: number;
}

export function pageToScreen(t: ViewTransform, x: number, y: number): Vertex {
  return [x * t.scale + t.offsetX, y * t.scale + t.offsetY];
}

export function screenToPage(t: ViewTransform, x: number, y: number): Vertex {
  return [(x - t.offsetX) / t.scale, (y - t.offsetY) / t.scale];
}

/** Zoom by `factor` keeping the screen point (sx, sy) fixed. */
export function zoomAt(
  t: ViewTransform,
  sx: number,
  sy: number,
  factor: number,
): ViewTransform {
  const scale = Math.min(64, Math.max(1 / 64, t.scale * factor));
  const applied = scale / t.scale;
  return {
    scale,
    offsetX: sx - (sx - t.offsetX) * applied,
    offsetY: sy - (sy - t.offsetY) * applied,
  };
}

export function pan(t: ViewTransform, dx: number, dy: number): ViewTransform {
  return { scale: t.scale, offsetX: t.offsetX + dx, offsetY: t.offsetY + dy };
}
