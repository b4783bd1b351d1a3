/**
 * Float64 U-net forward and backward passes, channels-first, matching the
 * reconstruction package's inference layer by layer (3x3 same convs, 2x2 max
 * pooling, 2x2 stride-2 transposed convs, ReLU, skip-channels-first concat,
 * linear 1x1 output).
 *
 * The backward pass is hand-written so the training gradients are exact in
 * float64: the finite-difference check can then be held to a tight tolerance,
 * which a float32 autodiff stack cannot meet on a 6-times-unrolled network.
 */

import { LAYER_SPECS, UNetWeights } from "./unet.js";

/** flat float64 arrays keyed by "<layer>.kernel" / "<layer>.bias" */
export type Weights = UNetWeights;

export interface Plane {
  channels: number;
  height: number;
  width: number;
  data: Float64Array;
}

export function plane(channels: number, height: number, width: number): Plane {
  return { channels, height, width, data: new Float64Array(channels * height * width) };
}

// ------------------------------------------------------------------- conv3x3

function conv2dSame(x: Plane, kernel: Float64Array, bias: Float64Array,
                    outCh: number, k: number): Plane {
  const { channels: inCh, height: h, width: w } = x;
  const p = k >> 1;
  const y = plane(outCh, h, w);
  for (let o = 0; o < outCh; o++) {
    const yBase = o * h * w;
    y.data.fill(bias[o], yBase, yBase + h * w);
    for (let c = 0; c < inCh; c++) {
      const xBase = c * h * w;
      const kBase = (o * inCh + c) * k * k;
      for (let u = 0; u < k; u++) {
        const di = u - p;
        for (let v = 0; v < k; v++) {
          const dj = v - p;
          const kv = kernel[kBase + u * k + v];
          if (kv === 0) continue;
          const i0 = Math.max(0, -di);
          const i1 = Math.min(h, h - di);
          for (let i = i0; i < i1; i++) {
            const yRow = yBase + i * w;
            const xRow = xBase + (i + di) * w;
            const j0 = Math.max(0, -dj);
            const j1 = Math.min(w, w - dj);
            for (let j = j0; j < j1; j++) {
              y.data[yRow + j] += kv * x.data[xRow + j + dj];
            }
          }
        }
      }
    }
  }
  return y;
}

function conv2dSameBackward(x: Plane, kernel: Float64Array, outCh: number,
                            k: number, dy: Plane,
                            dKernel: Float64Array, dBias: Float64Array): Plane {
  const { channels: inCh, height: h, width: w } = x;
  const p = k >> 1;
  const dx = plane(inCh, h, w);
  for (let o = 0; o < outCh; o++) {
    const yBase = o * h * w;
    let bSum = 0;
    for (let i = yBase; i < yBase + h * w; i++) bSum += dy.data[i];
    dBias[o] += bSum;
    for (let c = 0; c < inCh; c++) {
      const xBase = c * h * w;
      const kBase = (o * inCh + c) * k * k;
      for (let u = 0; u < k; u++) {
        const di = u - p;
        for (let v = 0; v < k; v++) {
          const dj = v - p;
          const kv = kernel[kBase + u * k + v];
          let kGrad = 0;
          const i0 = Math.max(0, -di);
          const i1 = Math.min(h, h - di);
          for (let i = i0; i < i1; i++) {
            const yRow = yBase + i * w;
            const xRow = xBase + (i + di) * w;
            const j0 = Math.max(0, -dj);
            const j1 = Math.min(w, w - dj);
            for (let j = j0; j < j1; j++) {
              const g = dy.data[yRow + j];
              kGrad += g * x.data[xRow + j + dj];
              dx.data[xRow + j + dj] += g * kv;
            }
          }
          dKernel[kBase + u * k + v] += kGrad;
        }
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------------- relu

function reluInPlace(x: Plane): Uint8Array {
  const mask = new Uint8Array(x.data.length);
  for (let i = 0; i < x.data.length; i++) {
    if (x.data[i] > 0) mask[i] = 1;
    else x.data[i] = 0;
  }
  return mask;
}

function reluBackwardInPlace(dy: Plane, mask: Uint8Array): void {
  for (let i = 0; i < dy.data.length; i++) {
    if (!mask[i]) dy.data[i] = 0;
  }
}

// ------------------------------------------------------------------- maxpool

function maxPool2(x: Plane): { y: Plane; argmax: Int32Array } {
  const { channels, height: h, width: w } = x;
  const oh = h >> 1;
  const ow = w >> 1;
  const y = plane(channels, oh, ow);
  const argmax = new Int32Array(channels * oh * ow);
  for (let c = 0; c < channels; c++) {
    for (let i = 0; i < oh; i++) {
      for (let j = 0; j < ow; j++) {
        let bestIdx = c * h * w + 2 * i * w + 2 * j;
        let best = x.data[bestIdx];
        for (const off of [1, w, w + 1]) {
          const idx = c * h * w + 2 * i * w + 2 * j + off;
          if (x.data[idx] > best) {
            best = x.data[idx];
            bestIdx = idx;
          }
        }
        y.data[c * oh * ow + i * ow + j] = best;
        argmax[c * oh * ow + i * ow + j] = bestIdx;
      }
    }
  }
  return { y, argmax };
}

function maxPool2Backward(dy: Plane, argmax: Int32Array,
                          inH: number, inW: number): Plane {
  const dx = plane(dy.channels, inH, inW);
  for (let i = 0; i < dy.data.length; i++) {
    dx.data[argmax[i]] += dy.data[i];
  }
  return dx;
}

// ---------------------------------------------------- 2x2 stride-2 transpose

function upconv2(x: Plane, kernel: Float64Array, bias: Float64Array,
                 outCh: number): Plane {
  const { channels: inCh, height: h, width: w } = x;
  const oh = 2 * h;
  const ow = 2 * w;
  const y = plane(outCh, oh, ow);
  for (let o = 0; o < outCh; o++) {
    const yBase = o * oh * ow;
    y.data.fill(bias[o], yBase, yBase + oh * ow);
    for (let c = 0; c < inCh; c++) {
      const xBase = c * h * w;
      const kBase = (o * inCh + c) * 4;
      const k00 = kernel[kBase];
      const k01 = kernel[kBase + 1];
      const k10 = kernel[kBase + 2];
      const k11 = kernel[kBase + 3];
      for (let i = 0; i < h; i++) {
        const top = yBase + 2 * i * ow;
        const bot = top + ow;
        const xRow = xBase + i * w;
        for (let j = 0; j < w; j++) {
          const v = x.data[xRow + j];
          y.data[top + 2 * j] += k00 * v;
          y.data[top + 2 * j + 1] += k01 * v;
          y.data[bot + 2 * j] += k10 * v;
          y.data[bot + 2 * j + 1] += k11 * v;
        }
      }
    }
  }
  return y;
}

function upconv2Backward(x: Plane, kernel: Float64Array, outCh: number,
                         dy: Plane, dKernel: Float64Array,
                         dBias: Float64Array): Plane {
  const { channels: inCh, height: h, width: w } = x;
  const ow = 2 * w;
  const dx = plane(inCh, h, w);
  for (let o = 0; o < outCh; o++) {
    const yBase = o * 4 * h * w;
    let bSum = 0;
    for (let i = yBase; i < yBase + 4 * h * w; i++) bSum += dy.data[i];
    dBias[o] += bSum;
    for (let c = 0; c < inCh; c++) {
      const xBase = c * h * w;
      const kBase = (o * inCh + c) * 4;
      const k00 = kernel[kBase];
      const k01 = kernel[kBase + 1];
      const k10 = kernel[kBase + 2];
      const k11 = kernel[kBase + 3];
      let g00 = 0, g01 = 0, g10 = 0, g11 = 0;
      for (let i = 0; i < h; i++) {
        const top = yBase + 2 * i * ow;
        const bot = top + ow;
        const xRow = xBase + i * w;
        for (let j = 0; j < w; j++) {
          const d00 = dy.data[top + 2 * j];
          const d01 = dy.data[top + 2 * j + 1];
          const d10 = dy.data[bot + 2 * j];
          const d11 = dy.data[bot + 2 * j + 1];
          const v = x.data[xRow + j];
          g00 += d00 * v;
          g01 += d01 * v;
          g10 += d10 * v;
          g11 += d11 * v;
          dx.data[xRow + j] += k00 * d00 + k01 * d01 + k10 * d10 + k11 * d11;
        }
      }
      dKernel[kBase] += g00;
      dKernel[kBase + 1] += g01;
      dKernel[kBase + 2] += g10;
      dKernel[kBase + 3] += g11;
    }
  }
  return dx;
}

// -------------------------------------------------------------------- concat

function concatChannels(a: Plane, b: Plane): Plane {
  const y = plane(a.channels + b.channels, a.height, a.width);
  y.data.set(a.data, 0);
  y.data.set(b.data, a.data.length);
  return y;
}

function splitChannels(dy: Plane, aCh: number): [Plane, Plane] {
  const hw = dy.height * dy.width;
  const da = plane(aCh, dy.height, dy.width);
  const db = plane(dy.channels - aCh, dy.height, dy.width);
  da.data.set(dy.data.subarray(0, aCh * hw));
  db.data.set(dy.data.subarray(aCh * hw));
  return [da, db];
}

// ------------------------------------------------------------------ the unet

interface ConvTrace {
  layer: string;
  input: Plane;
  mask?: Uint8Array; // ReLU mask on the output (absent for the linear output)
}

interface Trace {
  convs: ConvTrace[]; // in forward order
  pool1: { argmax: Int32Array; inH: number; inW: number };
  pool2: { argmax: Int32Array; inH: number; inW: number };
  e1Channels: number;
  e2Channels: number;
}

function convLayer(x: Plane, weights: Weights, layer: string,
                   trace: ConvTrace[], relu = true): Plane {
  const [outCh, , kh] = LAYER_SPECS[layer];
  const y = conv2dSame(x, weights[`${layer}.kernel`], weights[`${layer}.bias`], outCh, kh);
  const rec: ConvTrace = { layer, input: x };
  if (relu) rec.mask = reluInPlace(y);
  trace.push(rec);
  return y;
}

function upLayer(x: Plane, weights: Weights, layer: string,
                 trace: ConvTrace[]): Plane {
  const [outCh] = LAYER_SPECS[layer];
  const y = upconv2(x, weights[`${layer}.kernel`], weights[`${layer}.bias`], outCh);
  const rec: ConvTrace = { layer, input: x };
  rec.mask = reluInPlace(y);
  trace.push(rec);
  return y;
}

/** Forward pass on one (2, H, W) image; H and W divisible by 4. */
export function unetForward64(
  weights: Weights,
  x: Plane,
): { y: Plane; trace: Trace } {
  if (x.channels !== 2) throw new Error(`expected 2 input channels, got ${x.channels}`);
  if (x.height % 4 || x.width % 4) {
    throw new Error("H and W must be divisible by 4 (two pooling levels)");
  }
  const convs: ConvTrace[] = [];
  const e1 = convLayer(convLayer(x, weights, "enc1.conv1", convs),
                       weights, "enc1.conv2", convs);
  const p1 = maxPool2(e1);
  const e2 = convLayer(convLayer(p1.y, weights, "enc2.conv1", convs),
                       weights, "enc2.conv2", convs);
  const p2 = maxPool2(e2);
  const b = convLayer(convLayer(p2.y, weights, "bott.conv1", convs),
                      weights, "bott.conv2", convs);
  const u1 = upLayer(b, weights, "up1.deconv", convs);
  const d1 = convLayer(convLayer(concatChannels(e2, u1), weights, "dec1.conv1", convs),
                       weights, "dec1.conv2", convs);
  const u2 = upLayer(d1, weights, "up2.deconv", convs);
  const d2 = convLayer(convLayer(concatChannels(e1, u2), weights, "dec2.conv1", convs),
                       weights, "dec2.conv2", convs);
  const y = convLayer(d2, weights, "out.conv", convs, false);
  return {
    y,
    trace: {
      convs,
      pool1: { argmax: p1.argmax, inH: e1.height, inW: e1.width },
      pool2: { argmax: p2.argmax, inH: e2.height, inW: e2.width },
      e1Channels: e1.channels,
      e2Channels: e2.channels,
    },
  };
}

export function zeroGrads(): Weights {
  const out: Weights = {};
  for (const [layer, kshape] of Object.entries(LAYER_SPECS)) {
    out[`${layer}.kernel`] = new Float64Array(kshape[0] * kshape[1] * kshape[2] * kshape[3]);
    out[`${layer}.bias`] = new Float64Array(kshape[0]);
  }
  return out;
}

function convBackward(weights: Weights, rec: ConvTrace, dy: Plane,
                      grads: Weights): Plane {
  const [outCh, , kh] = LAYER_SPECS[rec.layer];
  if (rec.mask) reluBackwardInPlace(dy, rec.mask);
  if (rec.layer.endsWith(".deconv")) {
    return upconv2Backward(rec.input, weights[`${rec.layer}.kernel`], outCh, dy,
                           grads[`${rec.layer}.kernel`], grads[`${rec.layer}.bias`]);
  }
  return conv2dSameBackward(rec.input, weights[`${rec.layer}.kernel`], outCh, kh,
                            dy, grads[`${rec.layer}.kernel`], grads[`${rec.layer}.bias`]);
}

function addInto(dst: Plane, src: Plane): void {
  for (let i = 0; i < dst.data.length; i++) dst.data[i] += src.data[i];
}

/**
 * Backward pass: accumulates weight gradients into `grads` and returns the
 * gradient with respect to the network input.
 */
export function unetBackward64(
  weights: Weights,
  trace: Trace,
  dy: Plane,
  grads: Weights,
): Plane {
  const convs = [...trace.convs];
  const pop = () => convs.pop()!;

  let d: Plane = dy;
  d = convBackward(weights, pop(), d, grads); // out.conv
  d = convBackward(weights, pop(), d, grads); // dec2.conv2
  d = convBackward(weights, pop(), d, grads); // dec2.conv1
  const [dE1, dU2] = splitChannels(d, trace.e1Channels);
  d = convBackward(weights, pop(), dU2, grads); // up2.deconv
  d = convBackward(weights, pop(), d, grads); // dec1.conv2
  d = convBackward(weights, pop(), d, grads); // dec1.conv1
  const [dE2a, dU1] = splitChannels(d, trace.e2Channels);
  d = convBackward(weights, pop(), dU1, grads); // up1.deconv
  d = convBackward(weights, pop(), d, grads); // bott.conv2
  d = convBackward(weights, pop(), d, grads); // bott.conv1
  const dE2 = maxPool2Backward(d, trace.pool2.argmax, trace.pool2.inH, trace.pool2.inW);
  addInto(dE2, dE2a);
  d = convBackward(weights, pop(), dE2, grads); // enc2.conv2
  d = convBackward(weights, pop(), d, grads); // enc2.conv1
  const dP1 = maxPool2Backward(d, trace.pool1.argmax, trace.pool1.inH, trace.pool1.inW);
  addInto(dP1, dE1);
  d = convBackward(weights, pop(), dP1, grads); // enc1.conv2
  d = convBackward(weights, pop(), d, grads); // enc1.conv1
  return d;
}

// ----------------------------------------------------------------- inference

/** (re, im) vector -> (2, H, W) plane. */
export function vecToPlane(
  re: Float64Array,
  im: Float64Array,
  height: number,
  width: number,
): Plane {
  const x = plane(2, height, width);
  x.data.set(re, 0);
  x.data.set(im, height * width);
  return x;
}

export function planeToVec(y: Plane): { re: Float64Array; im: Float64Array } {
  const hw = y.height * y.width;
  return {
    re: y.data.slice(0, hw),
    im: y.data.slice(hw, 2 * hw),
  };
}

/**
 * Run the network on one complex contrast vector (row-major grid). Inputs are
 * rounded to float32 like the reconstruction package's network regularizer;
 * arithmetic is float64, which stays well inside the parity tolerance.
 */
export function applyNetwork(
  weights: Weights,
  tRe: Float64Array,
  tIm: Float64Array,
  gridNy: number,
  gridNx: number,
): { re: Float64Array; im: Float64Array } {
  const x = plane(2, gridNy, gridNx);
  const n = gridNy * gridNx;
  for (let i = 0; i < n; i++) {
    x.data[i] = Math.fround(tRe[i]);
    x.data[n + i] = Math.fround(tIm[i]);
  }
  const { y } = unetForward64(weights, x);
  return planeToVec(y);
}
