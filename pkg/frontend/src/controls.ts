// Small DOM builders for sliders and readouts. Ranges come from types.ts
// so they mirror the API contracts; readout text comes from API values.

import { DegradationParamJson, Range } from "./types.js";

export function slider(
  label: string,
  range: Range,
  value: number,
  onInput: (v: number) => void,
): HTMLElement {
  const wrap = document.createElement("label");
  wrap.className = "slider";
  const text = document.createElement("span");
  text.textContent = label;
  const input = document.createElement("input");
  input.type = "range";
  input.min = String(range.min);
  input.max = String(range.max);
  input.step = String(range.step);
  input.value = String(value);
  const readout = document.createElement("output");
  readout.textContent = String(value);
  input.addEventListener("input", () => {
    readout.textContent = input.value;
    onInput(Number(input.value));
  });
  wrap.append(text, input, readout);
  return wrap;
}

export function paramReadout(param: DegradationParamJson | null): string {
  if (!param) {
    return "no prediction yet";
  }
  const conf = ` (confidence ${param.confidence.toFixed(2)})`;
  if (param.kind === "noise") {
    return `predicted noise sigma: ${param.sigma_noise}${conf}`;
  }
  if (param.kind === "blur") {
    return `predicted blur sigma: ${param.sigma_blur}${conf}`;
  }
  return `predicted JPEG quality: ${param.quality}${conf}`;
}
