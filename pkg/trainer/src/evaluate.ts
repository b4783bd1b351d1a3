/**
 * Full TBIM evaluation with the float64 reference pipeline and trained
 * networks: same outer loop, seed conventions and RNE metric as the
 * reconstruction package, so reports from both components can be compared
 * directly (at the noiseless setting, where no sampling is involved).
 */

import { CVec, cvec, norm } from "./complex.js";
import { ProblemConfig, nPixels } from "./config.js";
import { DatasetSplit } from "./dataset.js";
import {
  FieldSet,
  GreensOperators,
  addNoise,
  assembleObservation,
  buildGreens,
  incidentFields,
  landweberStep,
  powerIteration,
  rne,
  softThreshold,
  solveState,
} from "./emref.js";
import { applyNetwork } from "./nn64.js";
import { UNetWeights } from "./unet.js";

export type Regularizer = (t: CVec) => CVec;

export function networkRegularizer(
  weights: UNetWeights,
  config: ProblemConfig,
): Regularizer {
  return (t) => {
    const out = applyNetwork(weights, t.re, t.im, config.grid_ny, config.grid_nx);
    return { re: out.re, im: out.im };
  };
}

export function softThresholdRegularizer(delta: number): Regularizer {
  return (t) => softThreshold(t, delta);
}

export interface ReconstructionResult {
  final: CVec;
  perStep: CVec[];
  gammas: number[];
  misfits: number[];
}

/** Born-iterative outer loop; power seed for step i (0-based) is seed + i. */
export function bimLoop(
  config: ProblemConfig,
  ops: GreensOperators,
  eInc: FieldSet,
  eMea: CVec,
  regularizers: Regularizer[],
  seed: number,
): ReconstructionResult {
  if (regularizers.length !== config.n_bim) {
    throw new Error(`need ${config.n_bim} regularizers, got ${regularizers.length}`);
  }
  let eTot: FieldSet = {
    values: eInc.values.map((v) => ({ re: v.re.slice(), im: v.im.slice() })),
    kind: "total",
  };
  let t = cvec(nPixels(config));
  const perStep: CVec[] = [];
  const gammas: number[] = [];
  const misfits: number[] = [];
  for (let i = 0; i < config.n_bim; i++) {
    const h = assembleObservation(ops, eTot);
    const { gamma } = powerIteration(h, config.n_pow, seed + i);
    for (let l = 0; l < config.n_lwb; l++) {
      t = regularizers[i](landweberStep(h, t, eMea, gamma));
    }
    perStep.push({ re: t.re.slice(), im: t.im.slice() });
    gammas.push(gamma);
    const r = landweberResidual(h, t, eMea);
    misfits.push(r);
    if (i + 1 < config.n_bim) {
      eTot = solveState(ops, t, eInc, config.n_bcg, 0.0);
    }
  }
  return { final: t, perStep, gammas, misfits };
}

function landweberResidual(
  h: ReturnType<typeof assembleObservation>,
  t: CVec,
  eMea: CVec,
): number {
  const m = h.rows;
  const n = h.cols;
  const r = cvec(m);
  for (let row = 0; row < m; row++) {
    let re = -eMea.re[row];
    let im = -eMea.im[row];
    const base = row * n;
    for (let c = 0; c < n; c++) {
      re += h.re[base + c] * t.re[c] - h.im[base + c] * t.im[c];
      im += h.re[base + c] * t.im[c] + h.im[base + c] * t.re[c];
    }
    r.re[row] = re;
    r.im[row] = im;
  }
  return norm(r);
}

export interface EvaluationReport {
  method: string;
  snr: number | "noiseless";
  noiseSeed: number;
  configHash: string;
  examples: number;
  rnePercent: number[];
  mrnePercent: number;
  mrnePerStepPercent: number[];
}

export function evaluateMethod(
  split: DatasetSplit,
  regularizersFor: (exampleIndex: number) => Regularizer[],
  method: string,
  snr: number | "noiseless",
  seedBase: number,
  limit?: number,
  progress?: (done: number, total: number) => void,
): EvaluationReport {
  const config = split.config;
  const ops = buildGreens(config);
  const eInc = incidentFields(config);
  const count = Math.min(limit ?? split.measurements.length, split.measurements.length);
  const rnes: number[] = [];
  const perStep: number[][] = [];
  for (let idx = 0; idx < count; idx++) {
    const eMea = addNoise(split.measurements[idx], snr, seedBase + idx);
    const result = bimLoop(
      config,
      ops,
      eInc,
      eMea,
      regularizersFor(idx),
      seedBase + idx,
    );
    rnes.push(rne(result.final, split.contrasts[idx]));
    perStep.push(result.perStep.map((t) => rne(t, split.contrasts[idx])));
    progress?.(idx + 1, count);
  }
  const meanPerStep = Array.from({ length: config.n_bim }, (_, i) =>
    perStep.reduce((acc, row) => acc + row[i], 0) / count,
  );
  return {
    method,
    snr,
    noiseSeed: seedBase,
    configHash: split.configHash,
    examples: count,
    rnePercent: rnes,
    mrnePercent: rnes.reduce((a, b) => a + b, 0) / count,
    mrnePerStepPercent: meanPerStep,
  };
}

export function evaluateTbim(
  split: DatasetSplit,
  stageWeights: UNetWeights[],
  snr: number | "noiseless",
  seedBase: number,
  limit?: number,
  progress?: (done: number, total: number) => void,
): EvaluationReport {
  if (stageWeights.length !== split.config.n_bim) {
    throw new Error(
      `need ${split.config.n_bim} stage bundles, got ${stageWeights.length}`,
    );
  }
  const regs = stageWeights.map((w) => networkRegularizer(w, split.config));
  return evaluateMethod(split, () => regs, "tbim", snr, seedBase, limit, progress);
}

export function evaluateSbim(
  split: DatasetSplit,
  snr: number | "noiseless",
  seedBase: number,
  limit?: number,
  progress?: (done: number, total: number) => void,
): EvaluationReport {
  const regs = Array.from({ length: split.config.n_bim }, () =>
    softThresholdRegularizer(split.config.sbim_delta),
  );
  return evaluateMethod(split, () => regs, "sbim", snr, seedBase, limit, progress);
}
