/**
 * Stage-wise training of the per-step regularization networks.
 *
 * For stage i each example is preprocessed once with the frozen reference
 * pipeline (stages 1..i-1 with their trained networks, fixed-count state
 * update): this yields the warm start t_{i-1}, the observation matrix H_i and
 * the step length gamma_i, all treated as constants. Training then unrolls
 * n_lwb {Landweber step, network} iterations with shared weights and
 * minimizes the mean squared error of the stage output against the
 * ground-truth contrast (2 channels, re/im).
 *
 * Forward, backward and the adaptive-moment update are all float64, so the
 * analytic gradients can be held against central finite differences at a
 * tight tolerance.
 */

import { CMat, CVec, cvec, hermvec, matvec } from "./complex.js";
import { ProblemConfig, nPixels } from "./config.js";
import { DatasetSplit } from "./dataset.js";
import {
  FieldSet,
  GreensOperators,
  addNoise,
  assembleObservation,
  landweberStep,
  powerIteration,
  solveState,
} from "./emref.js";
import {
  Plane,
  applyNetwork,
  plane,
  planeToVec,
  unetBackward64,
  unetForward64,
  vecToPlane,
  zeroGrads,
} from "./nn64.js";
import { LAYER_NAMES, UNetWeights, cloneWeights } from "./unet.js";

export interface StageInstance {
  h: CMat;
  gamma: number;
  eMea: CVec;
  t0: CVec;
  target: CVec;
}

/**
 * Run the frozen reference pipeline for one example up to the entry of
 * `stage` (1-based): stages 1..stage-1 complete (inner loop + state update),
 * then H_stage and gamma_stage are assembled. The power seed for outer step i
 * (0-based) is powerSeed + i, matching the reconstruction package.
 */
export function prepareInstance(
  config: ProblemConfig,
  ops: GreensOperators,
  eInc: FieldSet,
  eMea: CVec,
  target: CVec,
  stage: number,
  priorWeights: UNetWeights[],
  powerSeed: number,
): StageInstance {
  if (priorWeights.length !== stage - 1) {
    throw new Error(`stage ${stage} needs ${stage - 1} frozen prior bundles`);
  }
  let t = cvec(nPixels(config));
  let eTot: FieldSet = {
    values: eInc.values.map((v) => ({ re: v.re.slice(), im: v.im.slice() })),
    kind: "total",
  };
  let h = assembleObservation(ops, eTot);
  let gamma = powerIteration(h, config.n_pow, powerSeed).gamma;

  for (let i = 0; i < stage - 1; i++) {
    for (let l = 0; l < config.n_lwb; l++) {
      const step = landweberStep(h, t, eMea, gamma);
      t = applyNetwork(priorWeights[i], step.re, step.im, config.grid_ny, config.grid_nx);
    }
    eTot = solveState(ops, t, eInc, config.n_bcg, 0.0);
    h = assembleObservation(ops, eTot);
    gamma = powerIteration(h, config.n_pow, powerSeed + i + 1).gamma;
  }

  return {
    h,
    gamma,
    eMea: { re: eMea.re.slice(), im: eMea.im.slice() },
    t0: t,
    target: { re: target.re.slice(), im: target.im.slice() },
  };
}

/** Adjoint of the Landweber linear part: ds - gamma * H^H (H ds). */
function landweberAdjoint(h: CMat, ds: CVec, gamma: number): CVec {
  const g = hermvec(h, matvec(h, ds));
  const out = cvec(ds.re.length);
  for (let i = 0; i < ds.re.length; i++) {
    out.re[i] = ds.re[i] - gamma * g.re[i];
    out.im[i] = ds.im[i] - gamma * g.im[i];
  }
  return out;
}

/**
 * Unrolled-loss forward and backward for one example. The example's squared
 * error is summed over the 2N output entries; `gradScale` multiplies the
 * gradient contribution accumulated into `grads` (pass 1/(B*2N) to realize
 * the batch-mean MSE). Returns the summed squared error.
 */
export function exampleLossAndGrad(
  config: ProblemConfig,
  weights: UNetWeights,
  inst: StageInstance,
  grads: UNetWeights | null,
  gradScale = 1.0,
): number {
  const n = nPixels(config);
  const { grid_ny: gh, grid_nx: gw } = config;

  // forward
  let t = inst.t0;
  const traces = [];
  for (let l = 0; l < config.n_lwb; l++) {
    const s = landweberStep(inst.h, t, inst.eMea, inst.gamma);
    const { y, trace } = unetForward64(weights, vecToPlane(s.re, s.im, gh, gw));
    traces.push(trace);
    t = planeToVec(y);
  }

  let loss = 0;
  for (let i = 0; i < n; i++) {
    const dr = t.re[i] - inst.target.re[i];
    const di = t.im[i] - inst.target.im[i];
    loss += dr * dr + di * di;
  }
  if (!grads) return loss;

  // backward
  let dt = cvec(n);
  for (let i = 0; i < n; i++) {
    dt.re[i] = 2.0 * gradScale * (t.re[i] - inst.target.re[i]);
    dt.im[i] = 2.0 * gradScale * (t.im[i] - inst.target.im[i]);
  }
  for (let l = config.n_lwb - 1; l >= 0; l--) {
    const dPlane = vecToPlane(dt.re, dt.im, gh, gw);
    const dx: Plane = unetBackward64(weights, traces[l], dPlane, grads);
    const ds = planeToVec(dx);
    dt = landweberAdjoint(inst.h, ds, inst.gamma);
  }
  return loss;
}

/** Batch-mean MSE over instances (mean over examples and 2N entries). */
export function batchLoss(
  config: ProblemConfig,
  weights: UNetWeights,
  instances: StageInstance[],
): number {
  let total = 0;
  for (const inst of instances) {
    total += exampleLossAndGrad(config, weights, inst, null);
  }
  return total / (instances.length * 2 * nPixels(config));
}

/** Batch-mean MSE and its gradients with respect to every weight tensor. */
export function batchLossAndGrads(
  config: ProblemConfig,
  weights: UNetWeights,
  instances: StageInstance[],
): { loss: number; grads: UNetWeights } {
  const grads = zeroGrads();
  const scale = 1.0 / (instances.length * 2 * nPixels(config));
  let total = 0;
  for (const inst of instances) {
    total += exampleLossAndGrad(config, weights, inst, grads, scale);
  }
  return { loss: total * scale, grads };
}

// ---------------------------------------------------------------------- adam

export class Adam {
  private m: UNetWeights = {};
  private v: UNetWeights = {};
  private step = 0;

  constructor(
    readonly learningRate = 1e-3,
    readonly beta1 = 0.9,
    readonly beta2 = 0.999,
    readonly epsilon = 1e-8,
  ) {}

  apply(weights: UNetWeights, grads: UNetWeights): void {
    this.step += 1;
    const c1 = 1.0 - this.beta1 ** this.step;
    const c2 = 1.0 - this.beta2 ** this.step;
    for (const [name, w] of Object.entries(weights)) {
      if (!this.m[name]) {
        this.m[name] = new Float64Array(w.length);
        this.v[name] = new Float64Array(w.length);
      }
      const m = this.m[name];
      const v = this.v[name];
      const g = grads[name];
      for (let i = 0; i < w.length; i++) {
        m[i] = this.beta1 * m[i] + (1.0 - this.beta1) * g[i];
        v[i] = this.beta2 * v[i] + (1.0 - this.beta2) * g[i] * g[i];
        w[i] -= (this.learningRate * (m[i] / c1)) / (Math.sqrt(v[i] / c2) + this.epsilon);
      }
    }
  }
}

// ------------------------------------------------------------- training loop

export interface TrainOptions {
  epochs: number;
  batchSize: number;
  learningRate: number;
  shuffleSeed: number;
  log?: (line: string) => void;
}

export interface TrainResult {
  weights: UNetWeights; // best-validation checkpoint
  initialValMse: number;
  bestValMse: number;
  valMseByEpoch: number[];
}

/** Deterministic Fisher-Yates shuffle driven by splitmix64. */
function shuffled(count: number, seed: number, epoch: number): number[] {
  const order = Array.from({ length: count }, (_, i) => i);
  let state = BigInt(seed) * 1000003n + BigInt(epoch);
  const mask = (1n << 64n) - 1n;
  for (let i = count - 1; i > 0; i--) {
    state = (state + 0x9e3779b97f4a7c15n) & mask;
    let z = state;
    z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & mask;
    z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & mask;
    z = z ^ (z >> 31n);
    const j = Number(z % BigInt(i + 1));
    [order[i], order[j]] = [order[j], order[i]];
  }
  return order;
}

export function trainStage(
  config: ProblemConfig,
  initWeights: UNetWeights,
  trainInstances: StageInstance[],
  validInstances: StageInstance[],
  options: TrainOptions,
): TrainResult {
  const log = options.log ?? (() => undefined);
  for (const layer of LAYER_NAMES) {
    if (!initWeights[`${layer}.kernel`]) throw new Error(`init weights missing ${layer}`);
  }
  const weights = cloneWeights(initWeights);
  const optimizer = new Adam(options.learningRate);

  const initialValMse = batchLoss(config, weights, validInstances);
  let bestValMse = initialValMse;
  let best = cloneWeights(weights);
  const valMseByEpoch: number[] = [];
  log(`init: val MSE ${initialValMse.toExponential(4)}`);

  for (let epoch = 0; epoch < options.epochs; epoch++) {
    const order = shuffled(trainInstances.length, options.shuffleSeed, epoch);
    let trainLoss = 0;
    for (let start = 0; start < order.length; start += options.batchSize) {
      const part = order
        .slice(start, start + options.batchSize)
        .map((i) => trainInstances[i]);
      const { loss, grads } = batchLossAndGrads(config, weights, part);
      optimizer.apply(weights, grads);
      trainLoss += loss * part.length;
    }
    const valMse = batchLoss(config, weights, validInstances);
    valMseByEpoch.push(valMse);
    log(
      `epoch ${epoch + 1}/${options.epochs}: train MSE ` +
        `${(trainLoss / trainInstances.length).toExponential(4)}, val MSE ` +
        `${valMse.toExponential(4)}`,
    );
    if (valMse < bestValMse) {
      bestValMse = valMse;
      best = cloneWeights(weights);
    }
  }
  return { weights: best, initialValMse, bestValMse, valMseByEpoch };
}

/** Preprocess a split into stage instances (noise + frozen prior stages). */
export function prepareSplit(
  split: DatasetSplit,
  ops: GreensOperators,
  eInc: FieldSet,
  stage: number,
  priorWeights: UNetWeights[],
  snr: number | "noiseless",
  seedBase: number,
  limit?: number,
  progress?: (done: number, total: number) => void,
): StageInstance[] {
  const count = Math.min(limit ?? split.measurements.length, split.measurements.length);
  const out: StageInstance[] = [];
  for (let idx = 0; idx < count; idx++) {
    const eMea = addNoise(split.measurements[idx], snr, seedBase + idx);
    out.push(
      prepareInstance(
        split.config,
        ops,
        eInc,
        eMea,
        split.contrasts[idx],
        stage,
        priorWeights,
        seedBase + idx,
      ),
    );
    progress?.(idx + 1, count);
  }
  return out;
}
