// API payload shapes and control ranges. Slider ranges mirror the API
// contracts exactly; the UI never invents values outside them.

export type Task = "deblur" | "denoise" | "deblock";
export type PointLabel = "foreground" | "background";
export type Backend = "builtin" | "external";

export interface ClickPoint {
  x: number;
  y: number;
  label: PointLabel;
}

export interface DegradationParamJson {
  kind: "blur" | "noise" | "jpeg";
  confidence: number;
  sigma_blur?: number;
  sigma_noise?: number;
  quality?: number;
}

export interface EnhanceJson {
  brightness: number;
  contrast: number;
  smoothness: number;
  bokeh_sigma: number;
}

export const DEFAULT_ENHANCE: EnhanceJson = {
  brightness: 0,
  contrast: 1,
  smoothness: 0,
  bokeh_sigma: 0,
};

export interface Range {
  min: number;
  max: number;
  step: number;
}

export const STRENGTH_RANGE: Range = { min: 0, max: 2, step: 0.05 };

export const ENHANCE_RANGES: Record<keyof EnhanceJson, Range> = {
  brightness: { min: -0.5, max: 0.5, step: 0.01 },
  contrast: { min: 0.25, max: 4, step: 0.05 },
  smoothness: { min: 0, max: 5, step: 0.1 },
  bokeh_sigma: { min: 0, max: 8, step: 0.1 },
};

export interface Variant {
  strength_scale: number;
  image_png: string; // base64 PNG from the service
}

export interface SegmentResponse {
  layer_id: string;
  score: number;
  source: string;
  mask_png: string;
}

export interface EstimateResponse {
  layer_id: string;
  task: Task;
  param: DegradationParamJson;
}

export interface PreviewResponse {
  layer_id: string;
  variants: Variant[];
}

export interface CommitResponse {
  layer_id: string;
  committed: boolean;
  strength_scale: number;
  param: DegradationParamJson;
}

export interface LayerStateJson {
  id: string;
  mask: string;
  task: Task | null;
  predicted: DegradationParamJson | null;
  override: DegradationParamJson | null;
  strength_scale: number;
  enhance: EnhanceJson;
  mask_png?: string;
}

export interface SessionStateJson {
  id: string;
  width: number;
  height: number;
  channels: number;
  layers: LayerStateJson[];
}

export interface SessionCreated {
  id: string;
  width: number;
  height: number;
  channels: number;
}
