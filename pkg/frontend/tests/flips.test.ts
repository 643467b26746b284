import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import {
  canonicalFlips,
  canonicalPreview,
  decideLabels,
  flipImage,
  imagesEqual,
  type PixelImage,
} from "../src/flips.js";

const here = dirname(fileURLToPath(import.meta.url));

interface FlipFixture {
  name: string;
  width: number;
  height: number;
  data: number[];
  heads: { type_p: number; position_p: number; rotation_p: number };
  labels: { type: string; position: string; rotation: string };
  expected: number[];
}

const fixtures: FlipFixture[] = JSON.parse(
  readFileSync(join(here, "fixtures", "flips.json"), "utf-8"),
);

describe("canonical flip preview", () => {
  it("has ten server-generated fixtures", () => {
    expect(fixtures.length).toBe(10);
  });

  for (const fixture of fixtures) {
    it(`is pixel-identical to server canonicalization for ${fixture.name}`, () => {
      const image: PixelImage = {
        width: fixture.width,
        height: fixture.height,
        data: fixture.data,
      };
      const preview = canonicalPreview(image, fixture.heads);
      const expected: PixelImage = {
        width: fixture.width,
        height: fixture.height,
        data: fixture.expected,
      };
      expect(imagesEqual(preview, expected)).toBe(true);
    });

    it(`derives the same labels as the server for ${fixture.name}`, () => {
      expect(decideLabels(fixture.heads)).toEqual(fixture.labels);
    });
  }

  it("double flip is the identity", () => {
    const image: PixelImage = {
      width: 3,
      height: 2,
      data: Array.from({ length: 24 }, (_, i) => (i * 37) % 256),
    };
    for (const v of [false, true]) {
      for (const h of [false, true]) {
        expect(imagesEqual(flipImage(flipImage(image, v, h), v, h), image)).toBe(true);
      }
    }
  });

  it("thresholds at exactly 0.5 toward the positive label", () => {
    const labels = decideLabels({ type_p: 0.5, position_p: 0.5, rotation_p: 0.5 });
    expect(labels).toEqual({ type: "FRAG", position: "BOTTOM", rotation: "RIGHT" });
    expect(canonicalFlips(labels)).toEqual({ vertical: true, horizontal: true });
  });

  it("all-negative heads imply no flips", () => {
    const labels = decideLabels({ type_p: 0.1, position_p: 0.2, rotation_p: 0.3 });
    expect(canonicalFlips(labels)).toEqual({ vertical: false, horizontal: false });
  });
});
