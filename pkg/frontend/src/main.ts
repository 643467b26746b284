/* Application shell: project picker, mask editor tab, triage tab, report
 * preview tab.  State transitions live in state.ts/triage.ts; this file only
 * binds them to the DOM. */

import { ApiClient, type CardDto, type SharedConstants } from "./api.js";
import { canonicalPreview, HEAD_THRESHOLD_DEFAULT, type PixelImage } from "./flips.js";
import { MaskOverlay } from "./overlay.js";
import { boxesOverlap, pageAspect, pageBoxes, pageCount } from "./preview.js";
import {
  canNavigateAway,
  emptyState,
  isDirty,
  loadPage,
  save,
  stagePolygonEdit,
  stageReview,
  type CanvasOverlayState,
} from "./state.js";
import {
  acceptedCount,
  buildGrid,
  buildPatchBatch,
  bulkAccept,
  moveCursor,
  previewFor,
  setVerdict,
  toggleHead,
  type TriageGridState,
} from "./triage.js";

const api = new ApiClient("");

let constants: SharedConstants | null = null;
let reviewState: CanvasOverlayState = emptyState("");
let grid: TriageGridState = buildGrid([]);
let overlay: MaskOverlay | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

function setBanner(message: string | null): void {
  const banner = el<HTMLDivElement>("banner");
  banner.textContent = message ?? "";
  banner.style.display = message ? "block" : "none";
}

function threshold(): number {
  return constants?.head_threshold ?? HEAD_THRESHOLD_DEFAULT;
}

async function boot(): Promise<void> {
  constants = await api.getConstants();
  const projects = await api.listProjects();
  const picker = el<HTMLSelectElement>("project");
  picker.innerHTML = "";
  for (const project of projects) {
    const option = document.createElement("option");
    option.value = project.id;
    option.textContent = `${project.id} (${project.pages} pages)`;
    picker.appendChild(option);
  }
  picker.addEventListener("change", () => switchProject(picker.value));
  if (projects.length > 0) {
    await switchProject(projects[0].id);
  }
  for (const tab of ["pages", "triage", "report"]) {
    el<HTMLButtonElement>(`tab-${tab}`).addEventListener("click", () =>

      showTab(tab),
    );
  }
  window.addEventListener("beforeunload", (e) => {
    if (isDirty(reviewState)) {
      e.preventDefault();
    }
  });
}

function showTab(name: string): void {
  if (name !== "pages" && !canNavigateAway(reviewState, confirmUnsaved())) {
    return;
  }
  for (const tab of ["pages", "triage", "report"]) {
    el<HTMLDivElement>(`panel-${tab}`).style.display = tab === name ? "block" : "none";
  }
  if (name === "triage") {
    void refreshTriage();
  }
  if (name === "report") {
    void refreshReport();
  }
}

function confirmUnsaved(): boolean {
  return window.confirm("Unsaved mask edits will be lost. Leave anyway?");
}

async function switchProject(projectId: string): Promise<void> {
  reviewState = emptyState(projectId);
  await openPage(projectId, 1);
}

async function openPage(projectId: string, pageNo: number): Promise<void> {
  if (!canNavigateAway(reviewState, confirmUnsaved())) {
    return;
  }
  try {
    const page = await api.getPage(projectId, pageNo);
    reviewState = loadPage({ ...reviewState, projectId }, page);
    setBanner(null);
    el<HTMLSpanElement>("page-label").textContent =
      `page ${page.page.page_no} · v${page.version}`;
    const image = new Image();
    image.onload = () => overlay?.setScene(image, reviewState.detections);
    image.src = page.image_url;
    renderDetectionList();
  } catch (err) {
    setBanner(String(err));
  }
}

function renderDetectionList(): void {
  const list = el<HTMLUListElement>("detections");
  list.innerHTML = "";
  for (const detection of reviewState.detections) {
    const item = document.createElement("li");
    item.textContent = `${detection.id} · ${detection.review} · ${detection.score.toFixed(2)}`;
    item.className = detection.id === reviewState.selectedId ? "selected" : "";
    item.addEventListener("click", () => {
      reviewState = { ...reviewState, selectedId: detection.id };
      overlay?.setSelected(detection.id);
      renderDetectionList();
    });
    const accept = document.createElement("button");
    accept.textContent = "✓";
    accept.addEventListener("click", (e) => {
      e.stopPropagation();
      reviewState = stageReview(reviewState, detection.id, "accept");
      renderDetectionList();
      updateDirtyIndicator();
    });
    const reject = document.createElement("button");
    reject.textContent = "✗";
    reject.addEventListener("click", (e) => {
      e.stopPropagation();
      reviewState = stageReview(reviewState, detection.id, "reject");
      renderDetectionList();
      updateDirtyIndicator();
    });
    item.append(" ", accept, reject);
    list.appendChild(item);
  }
}

function updateDirtyIndicator(): void {
  el<HTMLButtonElement>("save").disabled = !isDirty(reviewState);
  el<HTMLSpanElement>("dirty").textContent = isDirty(reviewState)
    ? `${reviewState.pending.length} unsaved`
    : "";
  if (reviewState.inlineError) {
    setBanner(reviewState.inlineError);
  }
}

async function saveEdits(): Promise<void> {
  const result = await save(reviewState, api);
  reviewState = result.state;
  if (reviewState.conflictBanner) {
    setBanner(reviewState.conflictBanner);
  } else if (result.outcome?.kind === "applied") {
    setBanner(null);
    await openPage(reviewState.projectId, reviewState.pageNo);
  }
  updateDirtyIndicator();
}

async function refreshTriage(): Promise<void> {
  const cards = await api.listCards(reviewState.projectId);
  grid = buildGrid(cards);
  renderTriage(cards);
}

function renderTriage(cards: CardDto[]): void {
  const host = el<HTMLDivElement>("grid");
  host.innerHTML = "";
  grid.entries.forEach((entry, index) => {
    const cell = document.createElement("div");
    cell.className = "card" + (index === grid.cursor ? " cursor" : "");
    const img = document.createElement("img");
    img.src = entry.card.image_url;
    img.addEventListener("load", () => repaintPreview(index, img, cell));
    cell.appendChild(img);
    const caption = document.createElement("div");
    const preview = previewFor(entry, threshold());
    caption.textContent =
      `${entry.card.card_id} ${preview.labels.type}-${preview.labels.position}-` +
      `${preview.labels.rotation} ${entry.verdict ?? ""}`;
    cell.appendChild(caption);
    host.appendChild(cell);
  });
  el<HTMLSpanElement>("triage-count").textContent =
    `${acceptedCount(grid)} of ${grid.entries.length} kept`;
}

function repaintPreview(index: number, img: HTMLImageElement, cell: HTMLDivElement): void {
  const entry = grid.entries[index];
  const { vertical, horizontal } = previewFor(entry, threshold());
  if (!vertical && !horizontal) {
    return;
  }
  const canvas = document.createElement("canvas");
  canvas.width = img.naturalWidth;
  canvas.height = img.naturalHeight;
  const ctx = canvas.getContext("2d");
  if (!ctx) {
    return;
  }
  ctx.drawImage(img, 0, 0);
  const pixels = ctx.getImageData(0, 0, canvas.width, canvas.height);
  const flipped = canonicalPreview(
    { width: canvas.width, height: canvas.height, data: pixels.data },
    entry.heads,
    threshold(),
  ) as PixelImage;
  ctx.putImageData(
    new ImageData(new Uint8ClampedArray(flipped.data as Uint8ClampedArray), canvas.width),
    0,
    0,
  );
  img.replaceWith(canvas);
  cell.dataset.flipped = `${vertical ? "v" : ""}${horizontal ? "h" : ""}`;
}

function bindTriageKeys(): void {
  document.addEventListener("keydown", (e) => {
    if (el<HTMLDivElement>("panel-triage").style.display !== "block") {
      return;
    }
    if (e.key === "ArrowRight") {
      grid = moveCursor(grid, 1);
    } else if (e.key === "ArrowLeft") {
      grid = moveCursor(grid, -1);
    } else if (e.key === "a") {
      grid = setVerdict(grid, grid.cursor, "accept");
    } else if (e.key === "x") {
      grid = setVerdict(grid, grid.cursor, "reject");
    } else if (e.key === "t") {
      grid = toggleHead(grid, grid.cursor, "type");
    } else if (e.key === "p") {
      grid = toggleHead(grid, grid.cursor, "position");
    } else if (e.key === "r") {
      grid = toggleHead(grid, grid.cursor, "rotation");
    } else if (e.key === "A") {
      grid = bulkAccept(grid);
    } else if (e.key === "Enter") {
      void submitTriage();
      return;
    } else {
      return;
    }
    void refreshTriageView();
  });
}

async function refreshTriageView(): Promise<void> {
  const cards = grid.entries.map((entry) => entry.card);
  renderTriage(cards);
}

async function submitTriage(): Promise<void> {
  const patches = buildPatchBatch(grid);
  if (patches.length === 0) {
    return;
  }
  const outcome = await api.patchDetections(reviewState.projectId, patches);
  if (outcome.kind === "applied") {
    setBanner(`${outcome.applied} changes saved`);
    await refreshTriage();
  } else if (outcome.kind === "conflict") {
    setBanner("page changed, reload");
  } else {
    setBanner(outcome.message);
  }
}

async function refreshReport(): Promise<void> {
  const host = el<HTMLDivElement>("report-pages");
  host.innerHTML = "";
  const sidecar = await api.getLayout(reviewState.projectId);
  if (!sidecar) {
    host.textContent = "No layout yet - run the report job first.";
    return;
  }
  el<HTMLSpanElement>("report-count").textContent = `${pageCount(sidecar)} pages`;
  const width = 320;
  for (let page = 0; page < pageCount(sidecar); page++) {
    const boxes = pageBoxes(sidecar, page, width);
    if (boxesOverlap(boxes)) {
      setBanner(`layout page ${page + 1} has overlapping placements`);
    }
    const sheet = document.createElement("div");
    sheet.className = "sheet";
    sheet.style.width = `${width}px`;
    sheet.style.height = `${width * pageAspect(sidecar)}px`;
    for (const box of boxes) {
      const node = document.createElement("a");
      node.className = "placement";
      node.title = box.cardId;
      node.style.left = `${box.left}px`;
      node.style.top = `${box.top}px`;
      node.style.width = `${box.width}px`;
      node.style.height = `${box.height}px`;
      node.addEventListener("click", () => showTab("triage"));
      sheet.appendChild(node);
    }
    host.appendChild(sheet);
  }
  if (pageCount(sidecar) === 0) {
    host.textContent = "no items";
  }
}

window.addEventListener("DOMContentLoaded", () => {
  overlay = new MaskOverlay(el<HTMLCanvasElement>("overlay"), {
    onSelect(id) {
      reviewState = { ...reviewState, selectedId: id };
      overlay?.setSelected(id);
      renderDetectionList();
    },
    onPolygonEdited(id, vertices) {
      reviewState = stagePolygonEdit(reviewState, id, vertices);
      updateDirtyIndicator();
    },
    onDrawn() {
      setBanner("drawing new masks is saved through the add-mask command for now");
    },
  });
  el<HTMLButtonElement>("save").addEventListener("click", () => void saveEdits());
  el<HTMLButtonElement>("mode-select").addEventListener("click", () =>
    setMode("select"),
  );
  el<HTMLButtonElement>("mode-vertex").addEventListener("click", () =>
    setMode("vertex-edit"),
  );
  el<HTMLButtonElement>("mode-draw").addEventListener("click", () => setMode("draw"));
  el<HTMLInputElement>("page-no").addEventListener("change", (e) => {
    const target = e.target as HTMLInputElement;
    void openPage(reviewState.projectId, Number(target.value));
  });
  bindTriageKeys();
  void boot();
});

function setMode(mode: "select" | "draw" | "vertex-edit"): void {
  reviewState = { ...reviewState, mode };
  overlay?.setMode(mode);
}
