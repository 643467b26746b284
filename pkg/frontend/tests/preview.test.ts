import { describe, expect, it } from "vitest";

import type { LayoutSidecar } from "../src/api.js";
import { boxesOverlap, pageAspect, pageBoxes, pageCount, placementPage } from "../src/preview.js";

const SIDECAR: LayoutSidecar = {
  page: { width: 210, height: 297, margin: 15, gutter: 5, caption_height: 6 },
  page_count: 2,
  placements: [
    { card_id: "a", page_index: 0, x: 15, y: 15, width: 60, height: 80 },
    { card_id: "b", page_index: 0, x: 80, y: 15, width: 60, height: 80 },
    { card_id: "c", page_index: 1, x: 15, y: 15, width: 100, height: 120 },
  ],
};

describe("report preview", () => {
  it("page count mirrors the sidecar", () => {
    expect(pageCount(SIDECAR)).toBe(2);
  });

  it("scales placements to the target width", () => {
    const boxes = pageBoxes(SIDECAR, 0, 420); // 2x scale
    expect(boxes.length).toBe(2);
    expect(boxes[0]).toEqual({ cardId: "a", left: 30, top: 30, width: 120, height: 160 });
  });

  it("placements never overlap visually", () => {
    for (let page = 0; page < pageCount(SIDECAR); page++) {
      expect(boxesOverlap(pageBoxes(SIDECAR, page, 320))).toBe(false);
    }
  });

  it("detects overlaps when a layout is corrupt", () => {
    const corrupt = pageBoxes(SIDECAR, 0, 320);
    corrupt.push({ ...corrupt[0], cardId: "clone" });
    expect(boxesOverlap(corrupt)).toBe(true);
  });

  it("aspect ratio follows the page spec", () => {
    expect(pageAspect(SIDECAR)).toBeCloseTo(297 / 210, 12);
  });

  it("maps cards to their pages for navigation", () => {
    expect(placementPage(SIDECAR, "c")).toBe(1);
    expect(placementPage(SIDECAR, "zz")).toBeNull();
  });

  it("empty layout previews zero pages", () => {
    const empty: LayoutSidecar = { ...SIDECAR, page_count: 0, placements: [] };
    expect(pageCount(empty)).toBe(0);
    expect(pageBoxes(empty, 0, 320)).toEqual([]);
  });
});
