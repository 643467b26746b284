/* Canvas overlay: draws the page image plus detection polygons and routes
 * pointer gestures into vertex edits.  All geometry math lives in
 * geometry.ts; this file owns only the canvas and event plumbing. */

import type { DetectionDto } from "./api.js";
import {
  closestEdge,
  closestVertex,
  deleteVertex,
  dragVertex,
  insertVertex,
  pageToScreen,
  pan,
  screenToPage,
  zoomAt,
  type Vertex,
  type ViewTransform,
} from "./geometry.js";

const REVIEW_COLORS: Record<string, string> = {
  unreviewed: "#e6a817",
  accepted: "#2e9e44",
  edited: "#2e7fd0",
  rejected: "#c03030",
};

const HIT_RADIUS_PX = 8;

export interface OverlayCallbacks {
  onSelect(detectionId: string | null): void;
  onPolygonEdited(detectionId: string, vertices: Vertex[]): void;
  onDrawn(vertices: Vertex[]): void;
}

export class MaskOverlay {
  transform: ViewTransform = { scale: 1, offsetX: 0, offsetY: 0 };
  private image: HTMLImageElement | null = null;
  private detections: DetectionDto[] = [];
  private selectedId: string | null = null;
  private mode: "select" | "draw" | "vertex-edit" = "select";
  private draggingVertex: number = -1;
  private panning = false;
  private lastPointer: Vertex = [0, 0];
  private draft: Vertex[] = [];

  constructor(
    private readonly canvas: HTMLCanvasElement,
    private readonly callbacks: OverlayCallbacks,
  ) {
    canvas.addEventListener("pointerdown", (e) => this.pointerDown(e));
    canvas.addEventListener("pointermove", (e) => this.pointerMove(e));
    canvas.addEventListener("pointerup", (e) => this.pointerUp(e));
    canvas.addEventListener("wheel", (e) => this.wheel(e), { passive: false });
    canvas.addEventListener("dblclick", (e) => this.doubleClick(e));
  }

  setScene(image: HTMLImageElement | null, detections: DetectionDto[]): void {
    this.image = image;
    this.detections = detections;
    this.draft = [];
    if (image && this.transform.scale === 1 && this.transform.offsetX === 0) {
      const fit = Math.min(
        this.canvas.width / image.naturalWidth,
        this.canvas.height / image.naturalHeight,
      );
      this.transform = { scale: fit, offsetX: 0, offsetY: 0 };
    }
    this.render();
  }

  setMode(mode: "select" | "draw" | "vertex-edit"): void {
    this.mode = mode;
    if (mode !== "draw") {
      this.draft = [];
    }
    this.render();
  }

  setSelected(id: string | null): void {
    this.selectedId = id;
    this.render();
  }

  private selected(): DetectionDto | undefined {
    return this.detections.find((d) => d.id === this.selectedId);
  }

  private eventPage(e: MouseEvent): Vertex {
    const rect = this.canvas.getBoundingClientRect();
    return screenToPage(this.transform, e.clientX - rect.left, e.clientY - rect.top);
  }

  private pointerDown(e: PointerEvent): void {
    const [px, py] = this.eventPage(e);
    this.lastPointer = [e.clientX, e.clientY];
    if (this.mode === "draw") {
      this.draft.push([px, py]);
      this.render();
      return;
    }
    if (this.mode === "vertex-edit") {
      const detection = this.selected();
      if (detection) {
        const tolerance = HIT_RADIUS_PX / this.transform.scale;
        const vertexIdx = closestVertex(
          detection.polygon as Vertex[], px, py, tolerance,
        );
        if (vertexIdx >= 0) {
          this.draggingVertex = vertexIdx;
          this.canvas.setPointerCapture(e.pointerId);
          return;
        }
        const edgeIdx = closestEdge(detection.polygon as Vertex[], px, py, tolerance);
        if (edgeIdx >= 0) {
          const grown = insertVertex(detection.polygon as Vertex[], edgeIdx);
          this.callbacks.onPolygonEdited(detection.id, grown);
          this.draggingVertex = edgeIdx + 1;
          this.canvas.setPointerCapture(e.pointerId);
          return;
        }
      }
      this.panning = true;
      return;
    }
    // select mode: nearest polygon under the cursor, else pan
    const hit = this.detections.find((d) =>
      pointInPolygon(px, py, d.polygon as Vertex[]),
    );
    this.callbacks.onSelect(hit ? hit.id : null);
    this.panning = !hit;
  }

  private pointerMove(e: PointerEvent): void {
    if (this.draggingVertex >= 0) {
      const detection = this.selected();
      if (detection) {
        const [px, py] = this.eventPage(e);
        const vertices = detection.polygon as Vertex[];
        const moved = dragVertex(
          vertices,
          this.draggingVertex,
          px - vertices[this.draggingVertex][0],
          py - vertices[this.draggingVertex][1],
        );
        detection.polygon = moved;
        this.render();
      }
      return;
    }
    if (this.panning) {
      const dx = e.clientX - this.lastPointer[0];
      const dy = e.clientY - this.lastPointer[1];
      this.lastPointer = [e.clientX, e.clientY];
      this.transform = pan(this.transform, dx, dy);
      this.render();
    }
  }

  private pointerUp(e: PointerEvent): void {
    if (this.draggingVertex >= 0) {
      const detection = this.selected();
      if (detection) {
        this.callbacks.onPolygonEdited(detection.id, detection.polygon as Vertex[]);
      }
      this.draggingVertex = -1;
    }
    this.panning = false;
  }

  private doubleClick(e: MouseEvent): void {
    if (this.mode === "draw" && this.draft.length >= 3) {
      this.callbacks.onDrawn(this.draft.map((v) => [v[0], v[1]] as Vertex));
      this.draft = [];
      this.render();
      return;
    }
    if (this.mode === "vertex-edit") {
      const detection = this.selected();
      if (detection) {
        const [px, py] = this.eventPage(e);
        const tolerance = HIT_RADIUS_PX / this.transform.scale;
        const idx = closestVertex(detection.polygon as Vertex[], px, py, tolerance);
        if (idx >= 0) {
          this.callbacks.onPolygonEdited(
            detection.id,
            deleteVertex(detection.polygon as Vertex[], idx),
          );
        }
      }
    }
  }

  private wheel(e: WheelEvent): void {
    e.preventDefault();
    const rect = this.canvas.getBoundingClientRect();
    const factor = e.deltaY < 0 ? 1.15 : 1 / 1.15;
    this.transform = zoomAt(
      this.transform,
      e.clientX - rect.left,
      e.clientY - rect.top,
      factor,
    );
    this.render();
  }

  render(): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) {
      return;
    }
    ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);
    if (this.image) {
      const [x0, y0] = pageToScreen(this.transform, 0, 0);
      ctx.drawImage(
        this.image,
        x0,
        y0,
        this.image.naturalWidth * this.transform.scale,
        this.image.naturalHeight * this.transform.scale,
      );
    }
    for (const detection of this.detections) {
      this.drawPolygon(ctx, detection);
    }
    if (this.draft.length > 0) {
      ctx.strokeStyle = "#7b2ed0";
      ctx.setLineDash([6, 4]);
      this.tracePath(ctx, this.draft);
      ctx.stroke();
      ctx.setLineDash([]);
    }
  }

  private drawPolygon(ctx: CanvasRenderingContext2D, detection: DetectionDto): void {
    const selected = detection.id === this.selectedId;
    ctx.strokeStyle = REVIEW_COLORS[detection.review] ?? "#888";
    ctx.lineWidth = selected ? 2.5 : 1.25;
    this.tracePath(ctx, detection.polygon as Vertex[]);
    ctx.closePath();
    ctx.stroke();
    if (selected && this.mode === "vertex-edit") {
      ctx.fillStyle = "#ffffff";
      for (const [vx, vy] of detection.polygon as Vertex[]) {
        const [sx, sy] = pageToScreen(this.transform, vx, vy);
        ctx.beginPath();
        ctx.arc(sx, sy, 3.5, 0, Math.PI * 2);
        ctx.fill();
        ctx.stroke();
      }
    }
  }

  private tracePath(ctx: CanvasRenderingContext2D, vertices: Vertex[]): void {
    ctx.beginPath();
    vertices.forEach(([vx, vy], i) => {
      const [sx, sy] = pageToScreen(this.transform, vx, vy);
      if (i === 0) {
        ctx.moveTo(sx, sy);
      } else {
        ctx.lineTo(sx, sy);
      }
    });
  }
}

export function pointInPolygon(x: number, y: number, vertices: Vertex[]): boolean {
  let inside = false;
  let j = vertices.length - 1;
  for (let i = 0; i < vertices.length; i++) {
    const [xi, yi] = vertices[i];
    const [xj, yj] = vertices[j];
    if (yi > y !== yj > y && x < ((xj - xi) * (y - yi)) / (yj - yi) + xi) {
      inside = !inside;
    }
    j = i;
  }
  return inside;
}
