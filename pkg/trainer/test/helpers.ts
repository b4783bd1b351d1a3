import { fileURLToPath } from "node:url";

import { CVec, cvec } from "../src/complex.js";
import { Tensor } from "../src/tensorio.js";

export const TESTDATA = fileURLToPath(new URL("../testdata", import.meta.url));

export function complexRow(t: Tensor, row = 0): CVec {
  const cols = t.shape.length === 1 ? t.shape[0] : t.shape[t.shape.length - 1];
  const out = cvec(cols);
  const base = row * cols * 2;
  for (let i = 0; i < cols; i++) {
    out.re[i] = t.data[base + 2 * i];
    out.im[i] = t.data[base + 2 * i + 1];
  }
  return out;
}

/** max over entries of |a - b| / max(||b||_inf, floor) */
export function maxRelDiff(
  aRe: Float64Array | Float32Array,
  aIm: Float64Array | Float32Array | null,
  b: Tensor,
  floor = 1e-12,
): number {
  let scale = floor;
  for (const v of b.data) scale = Math.max(scale, Math.abs(v));
  let worst = 0;
  const n = aRe.length;
  for (let i = 0; i < n; i++) {
    if (aIm) {
      worst = Math.max(
        worst,
        Math.abs(aRe[i] - b.data[2 * i]) / scale,
        Math.abs(aIm[i] - b.data[2 * i + 1]) / scale,
      );
    } else {
      worst = Math.max(worst, Math.abs(aRe[i] - b.data[i]) / scale);
    }
  }
  return worst;
}
