/* Review state for one page: selection, edit mode, pending patches, and the
 * optimistic-concurrency token.  The server can rebuild everything here from
 * the patches alone. */

import type { ApiClient, DetectionDto, PageDto, PatchOutcome, ReviewPatch } from "./api.js";
import { polygonProblem, type Vertex } from "./geometry.js";

export type EditMode = "select" | "draw" | "vertex-edit";

export interface CanvasOverlayState {
  projectId: string;
  pageNo: number;
  version: number;
  detections: DetectionDto[];
  selectedId: string | null;
  mode: EditMode;
  pending: ReviewPatch[];
  conflictBanner: string | null;
  inlineError: string | null;
}

export function emptyState(projectId: string): CanvasOverlayState {
  return {
    projectId,
    pageNo: 0,
    version: 0,
    detections: [],
    selectedId: null,
    mode: "select",
    pending: [],
    conflictBanner: null,
    inlineError: null,
  };
}

export function loadPage(state: CanvasOverlayState, page: PageDto): CanvasOverlayState {
  return {
    ...state,
    pageNo: page.page.page_no,
    version: page.version,
    detections: page.detections.map((d) => ({ ...d, polygon: d.polygon.map((v) => [...v]) })),
    selectedId: null,
    pending: [],
    conflictBanner: null,
    inlineError: null,
  };
}

export function isDirty(state: CanvasOverlayState): boolean {
  return state.pending.length > 0;
}

/** Unsaved-changes guard: navigation must prompt while dirty. */
export function canNavigateAway(state: CanvasOverlayState, confirmed: boolean): boolean {
  return !isDirty(state) || confirmed;
}

function upsertPatch(pending: ReviewPatch[], patch: ReviewPatch): ReviewPatch[] {
  const rest = pending.filter(
    (p) => !(p.detection_id === patch.detection_id && p.op === patch.op),
  );
  return [...rest, patch];
}

/** Stage a polygon replacement; degenerate polygons block with a message. */
export function stagePolygonEdit(
  state: CanvasOverlayState,
  detectionId: string,
  vertices: Vertex[],
): CanvasOverlayState {
  const problem = polygonProblem(vertices);
  if (problem !== null) {
    return { ...state, inlineError: problem };
  }
  const detections = state.detections.map((d) =>
    d.id === detectionId ? { ...d, polygon: vertices.map((v) => [v[0], v[1]]) } : d,
  );
  const patch: ReviewPatch = {
    detection_id: detectionId,
    op: "replace_polygon",
    payload: vertices.map((v) => [v[0], v[1]]),
    version: state.version,
  };
  return {
    ...state,
    detections,
    pending: upsertPatch(state.pending, patch),
    inlineError: null,
  };
}

export function stageReview(
  state: CanvasOverlayState,
  detectionId: string,
  op: "accept" | "reject",
): CanvasOverlayState {
  const patch: ReviewPatch = { detection_id: detectionId, op, version: state.version };
  const review = op === "accept" ? "accepted" : "rejected";
  return {
    ...state,
    detections: state.detections.map((d) =>
      d.id === detectionId ? { ...d, review: review as DetectionDto["review"] } : d,
    ),
    pending: upsertPatch(
      state.pending.filter((p) => !(p.detection_id === detectionId && (p.op === "accept" || p.op === "reject"))),
      patch,
    ),
  };
}

export interface SaveResult {
  state: CanvasOverlayState;
  outcome: PatchOutcome | null;
}

/** Push pending patches as one atomic batch; stale tokens surface a banner. */
export async function save(
  state: CanvasOverlayState,
  api: ApiClient,
): Promise<SaveResult> {
  if (state.pending.length === 0) {
    return { state, outcome: null };
  }
  const outcome = await api.patchDetections(state.projectId, state.pending);
  if (outcome.kind === "conflict") {
    return {
      state: {
        ...state,
        conflictBanner: "page changed, reload",
      },
      outcome,
    };
  }
  if (outcome.kind === "rejected") {
    return { state: { ...state, inlineError: outcome.message }, outcome };
  }
  const version = outcome.versions[String(state.pageNo)] ?? state.version + 1;
  return {
    state: { ...state, pending: [], version, conflictBanner: null, inlineError: null },
    outcome,
  };
}
