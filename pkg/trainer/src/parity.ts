/**
 * Parity vector export: seeded random network inputs together with this
 * trainer's forward-pass outputs, written in the shared binary format with
 * channels-first (K, 2, H, W) layout so the reconstruction package can verify
 * its own forward pass against them.
 */

import { splitmix64Stream } from "./emref.js";
import { plane, unetForward64 } from "./nn64.js";
import { Tensor, writeTensors } from "./tensorio.js";
import { UNetWeights } from "./unet.js";

/** (K, 2, H, W) float32 inputs with entries ~ N(0, scale^2). */
export function parityInputs(
  count: number,
  height: number,
  width: number,
  seed: number,
  scale = 0.5,
): Float32Array {
  const n = count * 2 * height * width;
  const u = splitmix64Stream(BigInt(seed) * 2654435761n + 1n, 2 * n);
  const out = new Float32Array(n);
  for (let i = 0; i < n; i++) {
    const u1 = Math.max(u[2 * i], 1e-300);
    out[i] =
      scale *
      Math.sqrt(-2.0 * Math.log(u1)) *
      Math.cos(2.0 * Math.PI * u[2 * i + 1]);
  }
  return out;
}

/** Forward pass over a (K, 2, H, W) batch; outputs rounded to float32. */
export function forwardBatch(
  weights: UNetWeights,
  inputs: Float32Array,
  count: number,
  height: number,
  width: number,
): Float32Array {
  const size = 2 * height * width;
  const out = new Float32Array(count * size);
  for (let k = 0; k < count; k++) {
    const x = plane(2, height, width);
    for (let i = 0; i < size; i++) x.data[i] = inputs[k * size + i];
    const { y } = unetForward64(weights, x);
    for (let i = 0; i < size; i++) out[k * size + i] = Math.fround(y.data[i]);
  }
  return out;
}

export function exportParityVectors(
  weights: UNetWeights,
  directory: string,
  count: number,
  height: number,
  width: number,
  seed: number,
  meta?: Record<string, unknown>,
): { maxAbsOutput: number } {
  const inputs = parityInputs(count, height, width, seed);
  const outputs = forwardBatch(weights, inputs, count, height, width);

  let maxAbs = 0;
  for (const v of outputs) {
    if (!Number.isFinite(v)) throw new Error("parity outputs contain non-finite values");
    maxAbs = Math.max(maxAbs, Math.abs(v));
  }

  const tensors = new Map<string, Tensor>([
    ["inputs", { shape: [count, 2, height, width], dtype: "float32", data: inputs }],
    ["outputs", { shape: [count, 2, height, width], dtype: "float32", data: outputs }],
  ]);
  writeTensors(directory, tensors, "vectors.bin", "manifest.json", {
    count,
    height,
    width,
    seed,
    ...meta,
  });
  return { maxAbsOutput: maxAbs };
}
