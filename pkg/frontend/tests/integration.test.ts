/* Integration against the live HTTP facade: spawns the engine's server on
 * the fixture workspace (see scripts/make_fixtures.py) and exercises the
 * optimistic-concurrency and bulk-triage contracts end to end. */

import { spawn, type ChildProcess } from "node:child_process";
import { cpSync, existsSync, mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient, type ReviewPatch } from "../src/api.js";
import { buildGrid, buildPatchBatch, bulkAccept } from "../src/triage.js";
import { emptyState, loadPage, save, stageReview } from "../src/state.js";

const here = dirname(fileURLToPath(import.meta.url));
const fixtureWs = join(here, "fixtures", "ws");
const PORT = 8759;
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess | null = null;
let scratch: string | null = null;

async function waitForServer(): Promise<void> {
  for (let i = 0; i < 100; i++) {
    try {
      const response = await fetch(`${BASE}/api/projects`);
      if (response.ok) {
        return;
      }
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 150));
  }
  throw new Error("backend did not come up");
}

beforeAll(async () => {
  if (!existsSync(fixtureWs)) {
    throw new Error(
      "fixture workspace missing - run `npm run fixtures` (python3 scripts/make_fixtures.py)",
    );
  }
  // run against a scratch copy so tests never dirty the checked-in fixture
  scratch = mkdtempSync(join(tmpdir(), "review-ui-ws-"));
  cpSync(fixtureWs, scratch, { recursive: true });
  server = spawn(
    "lens",
    ["--root", scratch, "serve", "--listen", `127.0.0.1:${PORT}`],
    { stdio: "ignore" },
  );
  await waitForServer();
}, 30000);

afterAll(() => {
  server?.kill();
  if (scratch) {
    rmSync(scratch, { recursive: true, force: true });
  }
});

describe("review console against the live backend", () => {
  it("loads the fixture project and its detections", async () => {
    const api = new ApiClient(BASE);
    const projects = await api.listProjects();
    expect(projects.map((p) => p.id)).toContain("fixture");
    const page = await api.getPage("fixture", 1);
    expect(page.detections.length).toBe(10);
    expect(page.version).toBeGreaterThanOrEqual(1);
  });

  it("stale version token surfaces a conflict on the second session", async () => {
    const api = new ApiClient(BASE);
    // two browser tabs load the same page
    const tabA = loadPage(emptyState("fixture"), await api.getPage("fixture", 2));
    const tabB = loadPage(emptyState("fixture"), await api.getPage("fixture", 2));
    expect(tabA.version).toBe(tabB.version);

    const detId = tabA.detections[0].id;
    const savedA = await save(stageReview(tabA, detId, "accept"), api);
    expect(savedA.outcome?.kind).toBe("applied");

    const savedB = await save(stageReview(tabB, detId, "reject"), api);
    expect(savedB.outcome?.kind).toBe("conflict");
    expect(savedB.state.conflictBanner).toBe("page changed, reload");

    // reload clears the banner and adopts the new token
    const reloaded = loadPage(savedB.state, await api.getPage("fixture", 2));
    expect(reloaded.conflictBanner).toBeNull();
    expect(reloaded.version).toBe(tabB.version + 1);
  }, 20000);

  it("bulk triage of 50 cards lands as one atomic PATCH with applied 50", async () => {
    const api = new ApiClient(BASE);
    // all five pages' detections as pseudo-cards for the grid
    const cards = [];
    for (let pageNo = 1; pageNo <= 5; pageNo++) {
      const page = await api.getPage("fixture", pageNo);
      for (const det of page.detections) {
        cards.push({
          card_id: `pseudo_${det.id}`,
          detection_id: det.id,
          file: "",
          labels: { type: "ENT", position: "TOP", rotation: "LEFT" },
          canonical: false,
          catalog_id: null,
          image_url: "",
        });
      }
    }
    expect(cards.length).toBe(50);

    let grid = buildGrid(cards);
    grid = bulkAccept(grid);
    const patches: ReviewPatch[] = buildPatchBatch(grid);
    expect(patches.length).toBe(50);

    let requests = 0;
    const counting = new ApiClient(BASE, (input, init) => {
      requests += 1;
      return fetch(input, init);
    });
    const outcome = await counting.patchDetections("fixture", patches);
    expect(requests).toBe(1);
    expect(outcome.kind).toBe("applied");
    if (outcome.kind === "applied") {
      expect(outcome.applied).toBe(50);
    }

    for (let pageNo = 1; pageNo <= 5; pageNo++) {
      const page = await api.getPage("fixture", pageNo);
      for (const det of page.detections) {
        expect(det.review).toBe("accepted");
      }
    }
  }, 30000);

  it("shared constants pin the client flip rule to the server", async () => {
    const api = new ApiClient(BASE);
    const constants = await api.getConstants();
    expect(constants.head_threshold).toBe(0.5);
    expect(constants.flip_rule.vertical_when_position).toBe("BOTTOM");
    expect(constants.flip_rule.horizontal_when_rotation).toBe("RIGHT");
    expect(constants.canonical).toEqual({ position: "TOP", rotation: "LEFT" });
  });
});
