// Canvas painting: checkerboard under the frame, translucent mask on top.
// Rendering only; all pixels come from the service.

const CHECKER = 8;

export function drawCheckerboard(ctx: CanvasRenderingContext2D, w: number, h: number) {
  for (let y = 0; y < h; y += CHECKER) {
    for (let x = 0; x < w; x += CHECKER) {
      ctx.fillStyle = ((x / CHECKER + y / CHECKER) % 2 === 0) ? "#c8c8c8" : "#ffffff";
      ctx.fillRect(x, y, CHECKER, CHECKER);
    }
  }
}

export async function loadMaskImage(maskPngBase64: string): Promise<HTMLImageElement> {
  const img = new Image();
  img.src = `data:image/png;base64,${maskPngBase64}`;
  await img.decode();
  return img;
}

/**
 * Repaints the main canvas: checkerboard, the session frame, then the
 * active layer's mask tinted translucent so the selection reads at a
 * glance.
 */
export function drawFrame(
  canvas: HTMLCanvasElement,
  frame: CanvasImageSource | null,
  mask: HTMLImageElement | null,
) {
  const ctx = canvas.getContext("2d");
  if (!ctx) {
    return;
  }
  drawCheckerboard(ctx, canvas.width, canvas.height);
  if (frame) {
    ctx.drawImage(frame, 0, 0, canvas.width, canvas.height);
  }
  if (mask) {
    const scratch = document.createElement("canvas");
    scratch.width = canvas.width;
    scratch.height = canvas.height;
    const sctx = scratch.getContext("2d")!;
    sctx.drawImage(mask, 0, 0, scratch.width, scratch.height);
    sctx.globalCompositeOperation = "source-in";
    sctx.fillStyle = "rgba(64, 156, 255, 1)";
    sctx.fillRect(0, 0, scratch.width, scratch.height);
    ctx.globalAlpha = 0.45;
    ctx.drawImage(scratch, 0, 0);
    ctx.globalAlpha = 1.0;
  }
}
