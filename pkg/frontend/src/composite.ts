/** Pure pixel compositing: painter's algorithm over transformed layers.
 *
 * Works on plain grayscale buffers so the exact same code runs in the
 * browser and under vitest, and so an unedited session reproduces the
 * service composite pixel for pixel.
 */

import { BLANK, EditorLayer, EditSession, GrayBuffer } from "./types.js";

export function blankCanvas(width: number, height: number): GrayBuffer {
  return { width, height, data: new Uint8Array(width * height).fill(BLANK) };
}

function isIdentity(layer: EditorLayer): boolean {
  const t = layer.transform;
  return t.dx === 0 && t.dy === 0 && t.scale === 1;
}

/** Paint one layer onto the canvas; non-blank pixels overwrite. */
export function paintLayer(canvas: GrayBuffer, layer: EditorLayer): void {
  const img = layer.image;
  if (isIdentity(layer)) {
    const n = Math.min(canvas.data.length, img.data.length);
    for (let i = 0; i < n; i++) {
      const v = img.data[i];
      if (v !== BLANK) canvas.data[i] = v;
    }
    return;
  }
  // inverse nearest-neighbor mapping; scaling is about the box center,
  // translation applies after scaling
  const { dx, dy, scale } = layer.transform;
  const cx = layer.box[0] + layer.box[2] / 2;
  const cy = layer.box[1] + layer.box[3] / 2;
  for (let y = 0; y < canvas.height; y++) {
    for (let x = 0; x < canvas.width; x++) {
      const sx = Math.floor(cx + (x + 0.5 - dx - cx) / scale);
      const sy = Math.floor(cy + (y + 0.5 - dy - cy) / scale);
      if (sx < 0 || sy < 0 || sx >= img.width || sy >= img.height) continue;
      const v = img.data[sy * img.width + sx];
      if (v !== BLANK) canvas.data[y * canvas.width + x] = v;
    }
  }
}

/** Back-to-front composite of the session's visible layers. */
export function compositeSession(session: EditSession): GrayBuffer {
  const canvas = blankCanvas(session.width, session.height);
  for (const layer of session.layers) {
    if (!layer.visible) continue;
    paintLayer(canvas, layer);
  }
  return canvas;
}

export function buffersEqual(a: GrayBuffer, b: GrayBuffer): boolean {
  if (a.width !== b.width || a.height !== b.height) return false;
  for (let i = 0; i < a.data.length; i++) {
    if (a.data[i] !== b.data[i]) return false;
  }
  return true;
}

/** Pixels where the two buffers differ (for diff-bound checks). */
export function diffPixels(a: GrayBuffer, b: GrayBuffer): number[] {
  const out: number[] = [];
  for (let i = 0; i < a.data.length; i++) {
    if (a.data[i] !== b.data[i]) out.push(i);
  }
  return out;
}
