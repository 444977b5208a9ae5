// Framework-free studio state machine. All numeric readouts (predicted
// parameters, variant strengths, scores) are stored verbatim from API
// responses; the client performs no image processing of its own.

import { ApiClient, ApiError } from "./api.js";
import { debounce, Debounced, LatestWins } from "./latest.js";
import {
  Backend,
  ClickPoint,
  DEFAULT_ENHANCE,
  DegradationParamJson,
  EnhanceJson,
  STRENGTH_RANGE,
  Task,
  Variant,
} from "./types.js";

export const PREVIEW_DEBOUNCE_MS = 150;

export interface UiLayerState {
  id: string;
  maskPng: string | null;
  score: number | null;
  task: Task | null;
  predicted: DegradationParamJson | null;
  override: DegradationParamJson | null;
  strength: number;
  variants: Variant[];
  selectedVariant: number | null;
  enhance: EnhanceJson;
  committed: boolean;
}

export interface Toast {
  kind: "info" | "error";
  text: string;
}

export interface StudioState {
  sessionId: string | null;
  width: number;
  height: number;
  layers: UiLayerState[];
  activeLayerId: string | null;
  pendingPoints: ClickPoint[];
  backend: Backend;
  toasts: Toast[];
  fallbackBanner: string | null;
  compositeStamp: number;
  busy: boolean;
}

type Listener = (state: StudioState) => void;

function clamp(v: number, min: number, max: number): number {
  return Math.min(max, Math.max(min, v));
}

export class StudioController {
  readonly state: StudioState = {
    sessionId: null,
    width: 0,
    height: 0,
    layers: [],
    activeLayerId: null,
    pendingPoints: [],
    backend: "builtin",
    toasts: [],
    fallbackBanner: null,
    compositeStamp: 0,
    busy: false,
  };

  private listeners: Listener[] = [];
  private previewGate = new LatestWins();
  private previewDebounce: Debounced<[]>;

  constructor(private api: ApiClient) {
    this.previewDebounce = debounce(() => {
      void this.requestPreviews();
    }, PREVIEW_DEBOUNCE_MS);
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit() {
    for (const listener of this.listeners) {
      listener(this.state);
    }
  }

  private toast(kind: Toast["kind"], text: string) {
    this.state.toasts.push({ kind, text });
    this.emit();
  }

  activeLayer(): UiLayerState | null {
    return this.state.layers.find((l) => l.id === this.state.activeLayerId) ?? null;
  }

  async openImage(image: BodyInit, contentType: string): Promise<void> {
    const created = await this.api.createSession(image, contentType);
    this.state.sessionId = created.id;
    this.state.width = created.width;
    this.state.height = created.height;
    this.state.layers = [];
    this.state.activeLayerId = null;
    this.state.pendingPoints = [];
    this.state.compositeStamp = 0;
    this.emit();
  }

  /** Begin selecting a new object; subsequent clicks refine it. */
  startSelection() {
    this.state.pendingPoints = [];
    this.state.activeLayerId = null;
    this.emit();
  }

  /**
   * Left-click adds a foreground point, modifier-click a background
   * point; every change re-runs segmentation and refreshes the overlay
   * (replacing the provisional layer rather than stacking new ones).
   */
  async clickImage(x: number, y: number, modifier: boolean): Promise<void> {
    if (!this.state.sessionId) {
      return;
    }
    const label = modifier ? "background" : "foreground";
    this.state.pendingPoints.push({ x, y, label });
    if (!this.state.pendingPoints.some((p) => p.label === "foreground")) {
      this.toast("info", "add a foreground click first");
      this.state.pendingPoints.pop();
      return;
    }
    this.state.busy = true;
    this.emit();
    try {
      const resp = await this.api.segment(this.state.sessionId, {
        points: this.state.pendingPoints,
        backend: this.state.backend,
        replace_layer_id: this.state.activeLayerId,
      });
      const existing = this.activeLayer();
      if (existing) {
        existing.maskPng = resp.mask_png;
        existing.score = resp.score;
        existing.task = null;
        existing.predicted = null;
        existing.override = null;
        existing.variants = [];
        existing.selectedVariant = null;
        existing.committed = false;
      } else {
        this.state.layers.push({
          id: resp.layer_id,
          maskPng: resp.mask_png,
          score: resp.score,
          task: null,
          predicted: null,
          override: null,
          strength: 1.0,
          variants: [],
          selectedVariant: null,
          enhance: { ...DEFAULT_ENHANCE },
          committed: false,
        });
        this.state.activeLayerId = resp.layer_id;
      }
      this.state.fallbackBanner = null;
    } catch (err) {
      this.state.pendingPoints.pop();
      if (err instanceof ApiError && err.reason === "empty-selection") {
        this.toast("error", `selection empty: ${err.message}`);
      } else if (err instanceof ApiError && err.status === 502) {
        this.state.fallbackBanner =
          err.fallback === "builtin"
            ? "external segmenter unavailable - switch to the builtin backend?"
            : err.message;
      } else {
        throw err;
      }
    } finally {
      this.state.busy = false;
      this.emit();
    }
  }

  useBuiltinFallback() {
    this.state.backend = "builtin";
    this.state.fallbackBanner = null;
    this.emit();
  }

  setBackend(backend: Backend) {
    this.state.backend = backend;
    this.emit();
  }

  selectLayer(layerId: string) {
    this.state.activeLayerId = layerId;
    this.state.pendingPoints = [];
    this.emit();
  }

  /** Chooses the restoration task and fetches the predicted parameter. */
  async setTask(task: Task): Promise<void> {
    const layer = this.activeLayer();
    if (!layer || !this.state.sessionId) {
      return;
    }
    try {
      const resp = await this.api.estimate(this.state.sessionId, layer.id, task);
      layer.task = resp.task;
      layer.predicted = resp.param;
      layer.variants = [];
      layer.selectedVariant = null;
      layer.committed = false;
      this.emit();
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.toast("error", `cannot estimate: ${err.message}`);
        return;
      }
      throw err;
    }
  }

  /** Slider input; previews re-request after a 150 ms debounce. */
  setStrength(value: number) {
    const layer = this.activeLayer();
    if (!layer) {
      return;
    }
    layer.strength = clamp(value, STRENGTH_RANGE.min, STRENGTH_RANGE.max);
    this.emit();
    this.previewDebounce.call();
  }

  flushPendingPreview() {
    this.previewDebounce.flush();
  }

  /** At most one preview request is in flight; newer ones win. */
  async requestPreviews(): Promise<void> {
    const layer = this.activeLayer();
    if (!layer || !this.state.sessionId || !layer.task || !layer.predicted) {
      return;
    }
    const sessionId = this.state.sessionId;
    try {
      const resp = await this.previewGate.run((signal) =>
        this.api.preview(sessionId, layer.id, layer.strength, signal),
      );
      if (resp === null) {
        return; // superseded by a newer request
      }
      layer.variants = resp.variants;
      layer.selectedVariant = null;
      this.emit();
    } catch (err) {
      if (err instanceof ApiError && err.reason === "stale-preview") {
        return;
      }
      throw err;
    }
  }

  /** Committing a variant uses exactly the strength the service rendered. */
  async commitVariant(index: number): Promise<void> {
    const layer = this.activeLayer();
    if (!layer || !this.state.sessionId) {
      return;
    }
    const variant = layer.variants[index];
    if (!variant) {
      return;
    }
    const resp = await this.api.commit(
      this.state.sessionId,
      layer.id,
      variant.strength_scale,
      layer.override ?? undefined,
    );
    layer.selectedVariant = index;
    layer.strength = resp.strength_scale;
    layer.committed = resp.committed;
    this.emit();
    await this.refreshComposite();
  }

  async setOverride(override: DegradationParamJson | null): Promise<void> {
    const layer = this.activeLayer();
    if (!layer) {
      return;
    }
    layer.override = override;
    this.emit();
    this.previewDebounce.call();
  }

  async setEnhance(partial: Partial<EnhanceJson>): Promise<void> {
    const layer = this.activeLayer();
    if (!layer || !this.state.sessionId) {
      return;
    }
    const next = { ...layer.enhance, ...partial };
    await this.api.setEnhance(this.state.sessionId, layer.id, next);
    layer.enhance = next;
    this.emit();
    await this.refreshComposite();
  }

  /** Full-resolution composite replaces the preview strip. */
  async refreshComposite(): Promise<void> {
    const layer = this.activeLayer();
    if (layer && layer.committed) {
      layer.variants = [];
    }
    this.state.compositeStamp += 1;
    this.emit();
  }

  /** Page reload path: rebuild the layer list from the server state. */
  async restoreSession(sessionId: string): Promise<void> {
    const state = await this.api.getState(sessionId, true);
    this.state.sessionId = state.id;
    this.state.width = state.width;
    this.state.height = state.height;
    this.state.layers = state.layers.map((entry) => ({
      id: entry.id,
      maskPng: entry.mask_png ?? null,
      score: null,
      task: entry.task,
      predicted: entry.predicted,
      override: entry.override,
      strength: entry.strength_scale,
      variants: [],
      selectedVariant: null,
      enhance: entry.enhance,
      committed: entry.task !== null,
    }));
    this.state.activeLayerId =
      this.state.layers.length > 0 ? this.state.layers[this.state.layers.length - 1].id : null;
    this.state.pendingPoints = [];
    this.state.compositeStamp += 1;
    this.emit();
  }
}
