// DOM bootstrap: wires the controller to the canvas, sliders, variant
// strip, and composite pane. The session id rides in location.hash so a
// reload restores the full layer state from the service.

import { ApiClient } from "./api.js";
import { paramReadout, slider } from "./controls.js";
import { drawFrame, loadMaskImage } from "./overlay.js";
import { StudioController } from "./state.js";
import { ENHANCE_RANGES, EnhanceJson, STRENGTH_RANGE, Task } from "./types.js";

const api = new ApiClient("");
const controller = new StudioController(api);

const canvas = document.getElementById("frame") as HTMLCanvasElement;
const fileInput = document.getElementById("file") as HTMLInputElement;
const backendSelect = document.getElementById("backend") as HTMLSelectElement;
const banner = document.getElementById("banner") as HTMLDivElement;
const toasts = document.getElementById("toasts") as HTMLDivElement;
const taskButtons = document.getElementById("tasks") as HTMLDivElement;
const readout = document.getElementById("readout") as HTMLDivElement;
const strengthPane = document.getElementById("strength") as HTMLDivElement;
const variantStrip = document.getElementById("variants") as HTMLDivElement;
const enhancePane = document.getElementById("enhance") as HTMLDivElement;
const compositeImg = document.getElementById("composite") as HTMLImageElement;
const newSelectionBtn = document.getElementById("new-selection") as HTMLButtonElement;
const exportBtn = document.getElementById("export") as HTMLButtonElement;

let frameBitmap: ImageBitmap | null = null;
let maskImage: HTMLImageElement | null = null;
let lastMaskPng: string | null = null;
let lastCompositeStamp = -1;

fileInput.addEventListener("change", async () => {
  const file = fileInput.files?.[0];
  if (!file) {
    return;
  }
  const bytes = await file.arrayBuffer();
  await controller.openImage(bytes, file.type || "image/png");
  frameBitmap = await createImageBitmap(new Blob([bytes], { type: file.type }));
  canvas.width = controller.state.width;
  canvas.height = controller.state.height;
  location.hash = controller.state.sessionId ?? "";
  render(true);
});

canvas.addEventListener("click", async (ev) => {
  const rect = canvas.getBoundingClientRect();
  const x = Math.floor(((ev.clientX - rect.left) / rect.width) * canvas.width);
  const y = Math.floor(((ev.clientY - rect.top) / rect.height) * canvas.height);
  await controller.clickImage(x, y, ev.altKey || ev.ctrlKey || ev.metaKey);
});

canvas.addEventListener("contextmenu", async (ev) => {
  ev.preventDefault();
  const rect = canvas.getBoundingClientRect();
  const x = Math.floor(((ev.clientX - rect.left) / rect.width) * canvas.width);
  const y = Math.floor(((ev.clientY - rect.top) / rect.height) * canvas.height);
  await controller.clickImage(x, y, true);
});

backendSelect.addEventListener("change", () => {
  controller.setBackend(backendSelect.value as "builtin" | "external");
});

newSelectionBtn.addEventListener("click", () => controller.startSelection());

exportBtn.addEventListener("click", async () => {
  const sid = controller.state.sessionId;
  if (!sid) {
    return;
  }
  const blob = await api.exportImage(sid, "png");
  const link = document.createElement("a");
  link.href = URL.createObjectURL(blob);
  link.download = "restored.png";
  link.click();
  URL.revokeObjectURL(link.href);
});

for (const task of ["deblur", "denoise", "deblock"] as Task[]) {
  const btn = document.createElement("button");
  btn.textContent = task;
  btn.addEventListener("click", () => void controller.setTask(task));
  taskButtons.append(btn);
}

function renderStrength() {
  strengthPane.replaceChildren();
  const layer = controller.activeLayer();
  if (!layer || !layer.predicted) {
    return;
  }
  strengthPane.append(
    slider("strength", STRENGTH_RANGE, layer.strength, (v) => controller.setStrength(v)),
  );
}

function renderEnhance() {
  enhancePane.replaceChildren();
  const layer = controller.activeLayer();
  if (!layer) {
    return;
  }
  for (const key of Object.keys(ENHANCE_RANGES) as (keyof EnhanceJson)[]) {
    enhancePane.append(
      slider(key, ENHANCE_RANGES[key], layer.enhance[key], (v) => {
        void controller.setEnhance({ [key]: v });
      }),
    );
  }
}

function renderVariants() {
  variantStrip.replaceChildren();
  const layer = controller.activeLayer();
  if (!layer) {
    return;
  }
  layer.variants.forEach((variant, i) => {
    const cell = document.createElement("figure");
    cell.className = i === layer.selectedVariant ? "variant selected" : "variant";
    const img = document.createElement("img");
    img.src = `data:image/png;base64,${variant.image_png}`;
    const cap = document.createElement("figcaption");
    cap.textContent = `strength ${variant.strength_scale}`;
    cell.append(img, cap);
    cell.addEventListener("click", () => void controller.commitVariant(i));
    variantStrip.append(cell);
  });
}

async function render(forceMask = false) {
  const state = controller.state;
  banner.hidden = state.fallbackBanner === null;
  if (state.fallbackBanner !== null) {
    banner.replaceChildren();
    banner.append(state.fallbackBanner);
    const btn = document.createElement("button");
    btn.textContent = "use builtin";
    btn.addEventListener("click", () => controller.useBuiltinFallback());
    banner.append(btn);
  }
  toasts.replaceChildren(
    ...state.toasts.slice(-3).map((t) => {
      const div = document.createElement("div");
      div.className = `toast ${t.kind}`;
      div.textContent = t.text;
      return div;
    }),
  );
  const layer = controller.activeLayer();
  readout.textContent = layer
    ? `${paramReadout(layer.predicted)}${layer.score !== null ? ` | score ${layer.score.toFixed(2)}` : ""}`
    : "click an object to select it";
  const maskPng = layer?.maskPng ?? null;
  if (forceMask || maskPng !== lastMaskPng) {
    lastMaskPng = maskPng;
    maskImage = maskPng ? await loadMaskImage(maskPng) : null;
  }
  drawFrame(canvas, frameBitmap, maskImage);
  renderStrength();
  renderVariants();
  renderEnhance();
  if (state.sessionId && state.compositeStamp !== lastCompositeStamp) {
    lastCompositeStamp = state.compositeStamp;
    const blob = await api.compositePng(state.sessionId);
    compositeImg.src = URL.createObjectURL(blob);
  }
}

controller.subscribe(() => void render());

// Reload path: restore the session named in the hash.
const fromHash = location.hash.replace(/^#/, "");
if (fromHash) {
  void (async () => {
    await controller.restoreSession(fromHash);
    const blob = await api.compositePng(fromHash);
    frameBitmap = await createImageBitmap(blob);
    canvas.width = controller.state.width;
    canvas.height = controller.state.height;
    render(true);
  })();
}
