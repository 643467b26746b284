/* Client-side mirror of the server's canonicalization rule, so the triage
 * grid can preview flips per keystroke without a round trip.  Fidelity to the
 * server is pinned by fixture tests; thresholds and label names come from the
 * shared constants endpoint. */

export interface PixelImage {
  width: number;
  height: number;
  /** RGBA, row-major, 4 bytes per pixel. */
  data: Uint8ClampedArray | number[];
}

export interface HeadProbabilities {
  type_p: number;
  position_p: number;
  rotation_p: number;
}

export interface OrientationLabels {
  type: "ENT" | "FRAG";
  position: "TOP" | "BOTTOM";
  rotation: "LEFT" | "RIGHT";
}

export const HEAD_THRESHOLD_DEFAULT = 0.5;

/** Threshold each head; at or above the threshold means the positive label. */
export function decideLabels(
  heads: HeadProbabilities,
  threshold: number = HEAD_THRESHOLD_DEFAULT,
): OrientationLabels {
  return {
    type: heads.type_p >= threshold ? "FRAG" : "ENT",
    position: heads.position_p >= threshold ? "BOTTOM" : "TOP",
    rotation: heads.rotation_p >= threshold ? "RIGHT" : "LEFT",
  };
}

/** Flips that bring a card into mouth-up, section-left presentation. */
export function canonicalFlips(labels: OrientationLabels): {
  vertical: boolean;
  horizontal: boolean;
} {
  return {
    vertical: labels.position === "BOTTOM",
    horizontal: labels.rotation === "RIGHT",
  };
}

export function flipImage(
  image: PixelImage,
  vertical: boolean,
  horizontal: boolean,
): PixelImage {
  const { width, height } = image;
  const source = image.data;
  const out = new Uint8ClampedArray(width * height * 4);
  for (let y = 0; y < height; y++) {
    const sy = vertical ? height - 1 - y : y;
    for (let x = 0; x < width; x++) {
      const sx = horizontal ? width - 1 - x : x;
      const src = (sy * width + sx) * 4;
      const dst = (y * width + x) * 4;
      out[dst] = source[src] as number;
      out[dst + 1] = source[src + 1] as number;
      out[dst + 2] = source[src + 2] as number;
      out[dst + 3] = source[src + 3] as number;
    }
  }
  return { width, height, data: out };
}

/** What the server's canonicalization will do to this card's pixels. */
export function canonicalPreview(
  image: PixelImage,
  heads: HeadProbabilities,
  threshold: number = HEAD_THRESHOLD_DEFAULT,
): PixelImage {
  const { vertical, horizontal } = canonicalFlips(decideLabels(heads, threshold));
  return flipImage(image, vertical, horizontal);
}

export function imagesEqual(a: PixelImage, b: PixelImage): boolean {
  if (a.width !== b.width || a.height !== b.height) {
    return false;
  }
  const n = a.width * a.height * 4;
  for (let i = 0; i < n; i++) {
    if ((a.data[i] as number) !== (b.data[i] as number)) {
      return false;
    }
  }
  return true;
}
