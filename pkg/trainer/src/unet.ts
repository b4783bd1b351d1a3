/**
 * U-net weight bundles: layer table, validation, import/export in the shared
 * binary format, He-style initialization, and the inference-style forward
 * pass used for parity vectors and full TBIM evaluation.
 *
 * Kernels keep the bundle layout (out_ch, in_ch, kh, kw) end to end; weights
 * are held in float64 (the training precision) and cast to float32 on export.
 */

import { splitmix64Stream } from "./emref.js";
import {
  MissingTensorError,
  Tensor,
  TensorShapeError,
  numel,
  readTensors,
  writeTensors,
} from "./tensorio.js";

// layer name -> kernel shape (out_ch, in_ch, kh, kw); bias shape is (out_ch,)
export const LAYER_SPECS: Record<string, [number, number, number, number]> = {
  "enc1.conv1": [16, 2, 3, 3],
  "enc1.conv2": [16, 16, 3, 3],
  "enc2.conv1": [32, 16, 3, 3],
  "enc2.conv2": [32, 32, 3, 3],
  "bott.conv1": [64, 32, 3, 3],
  "bott.conv2": [64, 64, 3, 3],
  "up1.deconv": [32, 64, 2, 2],
  "dec1.conv1": [32, 64, 3, 3],
  "dec1.conv2": [32, 32, 3, 3],
  "up2.deconv": [16, 32, 2, 2],
  "dec2.conv1": [16, 32, 3, 3],
  "dec2.conv2": [16, 16, 3, 3],
  "out.conv": [2, 16, 1, 1],
};

export const LAYER_NAMES = Object.keys(LAYER_SPECS);

/** float64 arrays keyed by "<layer>.kernel" / "<layer>.bias", bundle layout */
export type UNetWeights = Record<string, Float64Array>;

export function validateBundle(tensors: Map<string, Tensor>): void {
  for (const [layer, kshape] of Object.entries(LAYER_SPECS)) {
    for (const [suffix, shape] of [
      ["kernel", kshape],
      ["bias", [kshape[0]]],
    ] as const) {
      const name = `${layer}.${suffix}`;
      const t = tensors.get(name);
      if (!t) throw new MissingTensorError(`missing tensor ${name}`);
      if (
        t.shape.length !== shape.length ||
        t.shape.some((d, i) => d !== shape[i])
      ) {
        throw new TensorShapeError(
          `tensor ${name} has shape [${t.shape}], expected [${shape}]`,
        );
      }
      if (!t.data.every(Number.isFinite)) {
        throw new Error(`tensor ${name} contains non-finite values`);
      }
    }
  }
}

export function importBundle(directory: string): UNetWeights {
  const { tensors } = readTensors(directory);
  validateBundle(tensors);
  const out: UNetWeights = {};
  for (const layer of LAYER_NAMES) {
    for (const suffix of ["kernel", "bias"]) {
      const name = `${layer}.${suffix}`;
      out[name] = Float64Array.from(tensors.get(name)!.data);
    }
  }
  return out;
}

export function exportBundle(
  weights: UNetWeights,
  directory: string,
  meta?: Record<string, unknown>,
): void {
  const tensors = new Map<string, Tensor>();
  for (const layer of LAYER_NAMES) {
    tensors.set(`${layer}.kernel`, {
      shape: [...LAYER_SPECS[layer]],
      dtype: "float32",
      data: Float32Array.from(weights[`${layer}.kernel`]),
    });
    tensors.set(`${layer}.bias`, {
      shape: [LAYER_SPECS[layer][0]],
      dtype: "float32",
      data: Float32Array.from(weights[`${layer}.bias`]),
    });
  }
  validateBundle(tensors);
  writeTensors(directory, tensors, "weights.bin", "manifest.json", meta);
}

/** He-style random initialization from the portable uniform stream. */
export function randomWeights(seed: number, scale?: number): UNetWeights {
  const out: UNetWeights = {};
  let streamSeed = BigInt(seed) * 65537n;
  for (const layer of LAYER_NAMES) {
    const kshape = LAYER_SPECS[layer];
    const fanIn = kshape[1] * kshape[2] * kshape[3];
    const std = scale ?? Math.sqrt(2.0 / fanIn);
    const n = numel(kshape);
    const u = splitmix64Stream(streamSeed, 2 * n);
    streamSeed += 1n;
    const data = new Float64Array(n);
    for (let i = 0; i < n; i++) {
      const u1 = Math.max(u[2 * i], 1e-300);
      // Box-Muller, rounded to float32 so exports are lossless
      data[i] = Math.fround(
        std * Math.sqrt(-2.0 * Math.log(u1)) * Math.cos(2.0 * Math.PI * u[2 * i + 1]),
      );
    }
    out[`${layer}.kernel`] = data;
    out[`${layer}.bias`] = new Float64Array(kshape[0]);
  }
  return out;
}

export function cloneWeights(weights: UNetWeights): UNetWeights {
  const out: UNetWeights = {};
  for (const [name, t] of Object.entries(weights)) out[name] = t.slice();
  return out;
}
