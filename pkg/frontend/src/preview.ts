/* Report preview straight from the layout sidecar: the packer's placements
 * drawn to scale.  The preview does no packing of its own. */

import type { LayoutSidecar } from "./api.js";

export interface PreviewBox {
  cardId: string;
  left: number;
  top: number;
  width: number;
  height: number;
}

export function pageCount(sidecar: LayoutSidecar): number {
  return sidecar.page_count;
}

/** Placements of one page scaled so the page is `targetWidth` wide. */
export function pageBoxes(
  sidecar: LayoutSidecar,
  pageIndex: number,
  targetWidth: number,
): PreviewBox[] {
  const scale = targetWidth / sidecar.page.width;
  return sidecar.placements
    .filter((p) => p.page_index === pageIndex)
    .map((p) => ({
      cardId: p.card_id,
      left: p.x * scale,
      top: p.y * scale,
      width: p.width * scale,
      height: p.height * scale,
    }));
}

export function pageAspect(sidecar: LayoutSidecar): number {
  return sidecar.page.height / sidecar.page.width;
}

/** Mirrors the packer invariant; the preview asserts it before drawing. */
export function boxesOverlap(boxes: PreviewBox[]): boolean {
  for (let i = 0; i < boxes.length; i++) {
    for (let j = i + 1; j < boxes.length; j++) {
      const a = boxes[i];
      const b = boxes[j];
      const disjoint =
        a.left + a.width <= b.left + 1e-9 ||
        b.left + b.width <= a.left + 1e-9 ||
        a.top + a.height <= b.top + 1e-9 ||
        b.top + b.height <= a.top + 1e-9;
      if (!disjoint) {
        return true;
      }
    }
  }
  return false;
}

export function placementPage(
  sidecar: LayoutSidecar,
  cardId: string,
): number | null {
  const hit = sidecar.placements.find((p) => p.card_id === cardId);
  return hit ? hit.page_index : null;
}
