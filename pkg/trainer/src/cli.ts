/**
 * Command-line surface: train-stage, export-parity, evaluate.
 *
 * A "bundle set" directory holds one weight bundle per outer step
 * (step1/, step2/, ...) plus a top-level meta.json with the architecture,
 * training condition and provenance.
 */

import * as fs from "node:fs";
import * as path from "node:path";
import { parseArgs } from "node:util";

import { nPixels } from "./config.js";
import { loadSplit } from "./dataset.js";
import { buildGreens, incidentFields } from "./emref.js";
import { evaluateSbim, evaluateTbim } from "./evaluate.js";
import { exportParityVectors } from "./parity.js";
import { prepareSplit, trainStage } from "./train.js";
import {
  LAYER_SPECS,
  UNetWeights,
  exportBundle,
  importBundle,
  randomWeights,
} from "./unet.js";

function parseSnr(raw: string | undefined): number | "noiseless" {
  if (raw === undefined || raw === "noiseless") return "noiseless";
  const v = Number(raw);
  if (!Number.isFinite(v)) throw new Error(`bad --snr value: ${raw}`);
  return v;
}

function loadPriors(bundles: string, stage: number): UNetWeights[] {
  const out: UNetWeights[] = [];
  for (let i = 1; i < stage; i++) {
    out.push(importBundle(path.join(bundles, `step${i}`)));
  }
  return out;
}

function cmdTrainStage(argv: string[]): number {
  const { values } = parseArgs({
    args: argv,
    options: {
      dataset: { type: "string" },
      stage: { type: "string" },
      bundles: { type: "string" },
      init: { type: "string" },
      snr: { type: "string" },
      epochs: { type: "string", default: "20" },
      batch: { type: "string", default: "32" },
      lr: { type: "string", default: "0.001" },
      seed: { type: "string", default: "0" },
      limit: { type: "string" },
      "val-limit": { type: "string" },
    },
  });
  if (!values.dataset || !values.stage || !values.bundles) {
    console.error("train-stage requires --dataset, --stage and --bundles");
    return 1;
  }
  const stage = Number(values.stage);
  const seed = Number(values.seed);
  const snr = parseSnr(values.snr);
  const train = loadSplit(path.join(values.dataset, "train"));
  const valid = loadSplit(path.join(values.dataset, "valid"));
  const config = train.config;
  if (stage < 1 || stage > config.n_bim) {
    console.error(`--stage must be in [1, ${config.n_bim}]`);
    return 1;
  }
  if (valid.configHash !== train.configHash) {
    console.error("train/valid splits have different config hashes");
    return 1;
  }

  const ops = buildGreens(config);
  const eInc = incidentFields(config);
  const priors = loadPriors(values.bundles, stage);

  const limit = values.limit ? Number(values.limit) : undefined;
  const valLimit = values["val-limit"] ? Number(values["val-limit"]) : undefined;
  const progress = (label: string) => (done: number, total: number) => {
    if (done % 50 === 0 || done === total) {
      console.log(`prepare ${label}: ${done}/${total}`);
    }
  };
  // split-disjoint noise/power seeds follow the dataset's own seed offsets
  const t0 = Date.now();
  const trainInstances = prepareSplit(
    train, ops, eInc, stage, priors, snr, seed, limit, progress("train"));
  const validInstances = prepareSplit(
    valid, ops, eInc, stage, priors, snr, seed + 10_000_000, valLimit,
    progress("valid"));
  console.log(`prepared ${trainInstances.length}+${validInstances.length} ` +
    `instances in ${((Date.now() - t0) / 1000).toFixed(1)}s`);

  let init: UNetWeights;
  let initFrom: string;
  if (values.init) {
    init = importBundle(values.init);
    initFrom = values.init;
  } else if (stage > 1 && fs.existsSync(path.join(values.bundles, `step${stage - 1}`, "manifest.json"))) {
    initFrom = path.join(values.bundles, `step${stage - 1}`);
    init = importBundle(initFrom);
  } else {
    init = randomWeights(seed + stage);
    initFrom = `random(seed=${seed + stage})`;
  }

  const result = trainStage(config, init, trainInstances, validInstances, {
    epochs: Number(values.epochs),
    batchSize: Number(values.batch),
    learningRate: Number(values.lr),
    shuffleSeed: seed + 7919 * stage,
    log: (line) => console.log(`stage ${stage} ${line}`),
  });

  const outDir = path.join(values.bundles, `step${stage}`);
  exportBundle(result.weights, outDir, {
    stage,
    snr,
    epochs: Number(values.epochs),
    batch: Number(values.batch),
    lr: Number(values.lr),
    seed,
    train_examples: trainInstances.length,
    valid_examples: validInstances.length,
    init: initFrom,
    initial_val_mse: result.initialValMse,
    best_val_mse: result.bestValMse,
    val_mse_by_epoch: result.valMseByEpoch,
    config_hash: train.configHash,
  });
  console.log(`wrote ${outDir} (val MSE ${result.initialValMse.toExponential(3)} ` +
    `-> ${result.bestValMse.toExponential(3)})`);

  // refresh the bundle-set meta once the final stage is trained
  if (stage === config.n_bim) {
    const meta = {
      format: "bimlab-weight-set-v1",
      steps: Array.from({ length: config.n_bim }, (_, i) => `step${i + 1}`),
      architecture: { layers: LAYER_SPECS, input_channels: 2, grid_pixels: nPixels(config) },
      training: { snr, epochs: Number(values.epochs), batch: Number(values.batch),
                  lr: Number(values.lr), seed },
      config_hash: train.configHash,
      provenance: `bimlab-trainer ${new Date().toISOString()}`,
    };
    fs.writeFileSync(path.join(values.bundles, "meta.json"),
      JSON.stringify(meta, null, 1));
    console.log(`wrote ${path.join(values.bundles, "meta.json")}`);
  }
  return 0;
}

function cmdExportParity(argv: string[]): number {
  const { values } = parseArgs({
    args: argv,
    options: {
      weights: { type: "string" },
      out: { type: "string" },
      count: { type: "string", default: "8" },
      height: { type: "string", default: "32" },
      width: { type: "string", default: "32" },
      seed: { type: "string", default: "0" },
    },
  });
  if (!values.weights || !values.out) {
    console.error("export-parity requires --weights and --out");
    return 1;
  }
  const weights = importBundle(values.weights);
  const { maxAbsOutput } = exportParityVectors(
    weights,
    values.out,
    Number(values.count),
    Number(values.height),
    Number(values.width),
    Number(values.seed),
    { weights: values.weights },
  );
  console.log(`wrote ${values.out} (${values.count} vectors, ` +
    `max |output| ${maxAbsOutput.toExponential(3)})`);
  return 0;
}

function cmdEvaluate(argv: string[]): number {
  const { values } = parseArgs({
    args: argv,
    options: {
      dataset: { type: "string" },
      split: { type: "string", default: "test" },
      method: { type: "string", default: "tbim" },
      bundles: { type: "string" },
      snr: { type: "string" },
      seed: { type: "string", default: "0" },
      limit: { type: "string" },
      out: { type: "string" },
    },
  });
  if (!values.dataset) {
    console.error("evaluate requires --dataset");
    return 1;
  }
  const split = loadSplit(path.join(values.dataset, values.split!));
  const snr = parseSnr(values.snr);
  const seed = Number(values.seed);
  const limit = values.limit ? Number(values.limit) : undefined;
  const progress = (done: number, total: number) => {
    if (done % 20 === 0 || done === total) console.log(`evaluate: ${done}/${total}`);
  };

  let report;
  if (values.method === "tbim") {
    if (!values.bundles) {
      console.error("evaluate --method tbim requires --bundles");
      return 1;
    }
    const stageWeights = Array.from({ length: split.config.n_bim }, (_, i) =>
      importBundle(path.join(values.bundles!, `step${i + 1}`)),
    );
    report = evaluateTbim(split, stageWeights, snr, seed, limit, progress);
  } else if (values.method === "sbim") {
    report = evaluateSbim(split, snr, seed, limit, progress);
  } else {
    console.error(`unknown method ${values.method}`);
    return 1;
  }

  const snrLabel = report.snr === "noiseless" ? "noiseless" : `${report.snr} dB`;
  console.log(
    `${report.method} ${values.split} (${snrLabel}): MRNE ` +
      `${report.mrnePercent.toFixed(2)}% over ${report.examples} examples; per step ` +
      report.mrnePerStepPercent.map((v) => `${v.toFixed(2)}%`).join(" "),
  );
  if (values.out) {
    fs.writeFileSync(values.out, JSON.stringify(report, null, 1));
    console.log(`wrote ${values.out}`);
  }
  return 0;
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  try {
    switch (command) {
      case "train-stage":
        return cmdTrainStage(rest);
      case "export-parity":
        return cmdExportParity(rest);
      case "evaluate":
        return cmdEvaluate(rest);
      default:
        console.error(
          "usage: bimlab-trainer <train-stage|export-parity|evaluate> [options]",
        );
        return 1;
    }
  } catch (err) {
    console.error(err instanceof Error ? err.message : String(err));
    return 1;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  path.resolve(process.argv[1]) === new URL(import.meta.url).pathname;
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
