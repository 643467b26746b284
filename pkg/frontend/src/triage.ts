/* Keyboard-first triage grid: accept/reject cards and toggle their three
 * orientation heads.  All decisions accumulate locally and leave as ONE
 * atomic patch batch. */

import type { CardDto, HeadPayload, ReviewPatch } from "./api.js";
import {
  canonicalFlips,
  decideLabels,
  type HeadProbabilities,
  type OrientationLabels,
} from "./flips.js";

export interface TriageEntry {
  card: CardDto;
  heads: HeadProbabilities;
  headsTouched: boolean;
  verdict: "accept" | "reject" | null;
}

export interface TriageGridState {
  entries: TriageEntry[];
  cursor: number;
}

export function buildGrid(cards: CardDto[]): TriageGridState {
  return {
    entries: cards.map((card) => ({
      card,
      heads: {
        type_p: card.heads?.type_p ?? 0,
        position_p: card.heads?.position_p ?? 0,
        rotation_p: card.heads?.rotation_p ?? 0,
      },
      headsTouched: false,
      verdict: null,
    })),
    cursor: 0,
  };
}

export function moveCursor(state: TriageGridState, delta: number): TriageGridState {
  if (state.entries.length === 0) {
    return state;
  }
  const cursor = Math.max(0, Math.min(state.entries.length - 1, state.cursor + delta));
  return { ...state, cursor };
}

function flipProbability(value: number): number {
  // human toggles land exactly on {0, 1}
  return value >= 0.5 ? 0 : 1;
}

export type HeadName = "type" | "position" | "rotation";

export function toggleHead(
  state: TriageGridState,
  index: number,
  head: HeadName,
): TriageGridState {
  const entries = state.entries.map((entry, i) => {
    if (i !== index) {
      return entry;
    }
    const heads = { ...entry.heads };
    if (head === "type") {
      heads.type_p = flipProbability(heads.type_p);
    } else if (head === "position") {
      heads.position_p = flipProbability(heads.position_p);
    } else {
      heads.rotation_p = flipProbability(heads.rotation_p);
    }
    return { ...entry, heads, headsTouched: true };
  });
  return { ...state, entries };
}

export function setVerdict(
  state: TriageGridState,
  index: number,
  verdict: "accept" | "reject" | null,
): TriageGridState {
  const entries = state.entries.map((entry, i) =>
    i === index ? { ...entry, verdict } : entry,
  );
  return { ...state, entries };
}

export function bulkAccept(state: TriageGridState): TriageGridState {
  return {
    ...state,
    entries: state.entries.map((entry) => ({ ...entry, verdict: "accept" as const })),
  };
}

/** Labels and flips the current heads imply (drives the live preview). */
export function previewFor(entry: TriageEntry, threshold: number): {
  labels: OrientationLabels;
  vertical: boolean;
  horizontal: boolean;
} {
  const labels = decideLabels(entry.heads, threshold);
  return { labels, ...canonicalFlips(labels) };
}

/** Everything decided in the grid as one atomic ReviewPatch batch. */
export function buildPatchBatch(state: TriageGridState): ReviewPatch[] {
  const patches: ReviewPatch[] = [];
  for (const entry of state.entries) {
    if (entry.verdict !== null) {
      patches.push({
        detection_id: entry.card.detection_id,
        op: entry.verdict === "accept" ? "accept" : "reject",
      });
    }
    if (entry.headsTouched) {
      const payload: HeadPayload = {
        type_p: entry.heads.type_p >= 0.5 ? 1 : 0,
        position_p: entry.heads.position_p >= 0.5 ? 1 : 0,
        rotation_p: entry.heads.rotation_p >= 0.5 ? 1 : 0,
        source: "human",
      };
      patches.push({
        detection_id: entry.card.detection_id,
        op: "set_heads",
        payload,
      });
    }
  }
  return patches;
}

/** Cards that survive triage for the report preview count. */
export function acceptedCount(state: TriageGridState): number {
  return state.entries.filter((e) => e.verdict !== "reject").length;
}
