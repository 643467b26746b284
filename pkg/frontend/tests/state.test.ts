import { describe, expect, it } from "vitest";

import type { PageDto, PatchOutcome, ReviewPatch } from "../src/api.js";
import {
  canNavigateAway,
  emptyState,
  isDirty,
  loadPage,
  save,
  stagePolygonEdit,
  stageReview,
} from "../src/state.js";

function pageFixture(): PageDto {
  return {
    page: { page_no: 3, width: 64, height: 64, dpi: 300, file: "pages/0003.png", checksum: "x" },
    image_url: "/api/projects/p/pages/3/image",
    version: 7,
    backend_id: "oracle:preds.json",
    detections: [
      {
        id: "p3_d1",
        score: 0.9,
        polygon: [
          [1, 1],
          [20, 1],
          [10, 18],
        ],
        origin: "model",
        review: "unreviewed",
      },
      {
        id: "p3_d2",
        score: 0.7,
        polygon: [
          [30, 30],
          [50, 30],
          [40, 48],
        ],
        origin: "model",
        review: "unreviewed",
      },
    ],
  };
}

class FakeApi {
  calls: ReviewPatch[][] = [];
  nextOutcome: PatchOutcome = { kind: "applied", applied: 1, versions: { "3": 8 } };

  async patchDetections(_project: string, patches: ReviewPatch[]): Promise<PatchOutcome> {
    this.calls.push(patches);
    return this.nextOutcome;
  }
}

describe("review state", () => {
  it("loading a page resets dirty state and records the version token", () => {
    const state = loadPage(emptyState("p"), pageFixture());
    expect(state.version).toBe(7);
    expect(isDirty(state)).toBe(false);
    expect(canNavigateAway(state, false)).toBe(true);
  });

  it("staging a polygon edit marks dirty and carries the token", () => {
    let state = loadPage(emptyState("p"), pageFixture());
    state = stagePolygonEdit(state, "p3_d1", [
      [2, 2],
      [21, 1],
      [10, 18],
    ]);
    expect(isDirty(state)).toBe(true);
    expect(state.pending[0].op).toBe("replace_polygon");
    expect(state.pending[0].version).toBe(7);
    expect(canNavigateAway(state, false)).toBe(false);
    expect(canNavigateAway(state, true)).toBe(true);
  });

  it("degenerate polygons block with an inline message", () => {
    let state = loadPage(emptyState("p"), pageFixture());
    state = stagePolygonEdit(state, "p3_d1", [
      [2, 2],
      [21, 1],
    ]);
    expect(state.inlineError).toMatch(/3 vertices/);
    expect(isDirty(state)).toBe(false);
  });

  it("accept then reject keeps one review patch per detection", () => {
    let state = loadPage(emptyState("p"), pageFixture());
    state = stageReview(state, "p3_d1", "accept");
    state = stageReview(state, "p3_d1", "reject");
    const reviews = state.pending.filter((p) => p.detection_id === "p3_d1");
    expect(reviews.length).toBe(1);
    expect(reviews[0].op).toBe("reject");
  });

  it("successful save clears pending and adopts the new version", async () => {
    const api = new FakeApi();
    let state = loadPage(emptyState("p"), pageFixture());
    state = stageReview(state, "p3_d1", "accept");
    const result = await save(state, api as never);
    expect(api.calls.length).toBe(1);
    expect(result.state.pending).toEqual([]);
    expect(result.state.version).toBe(8);
  });

  it("conflict outcome surfaces the reload banner", async () => {
    const api = new FakeApi();
    api.nextOutcome = {
      kind: "conflict",
      pageNo: 3,
      currentVersion: 9,
      message: "stale",
    };
    let state = loadPage(emptyState("p"), pageFixture());
    state = stageReview(state, "p3_d2", "accept");
    const result = await save(state, api as never);
    expect(result.state.conflictBanner).toBe("page changed, reload");
    expect(isDirty(result.state)).toBe(true); // edits are not lost
  });

  it("saving with nothing pending is a no-op", async () => {
    const api = new FakeApi();
    const state = loadPage(emptyState("p"), pageFixture());
    const result = await save(state, api as never);
    expect(api.calls.length).toBe(0);
    expect(result.outcome).toBeNull();
  });
});
