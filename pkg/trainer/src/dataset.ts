/** Reader for the dataset directory format produced by the reconstruction package. */

import * as fs from "node:fs";
import * as path from "node:path";

import { CVec, cvec } from "./complex.js";
import { ProblemConfig, configFromMeta } from "./config.js";
import { Manifest, numel, readTensors } from "./tensorio.js";

export interface Cylinder {
  center_x: number;
  center_y: number;
  radius: number;
  contrast: number;
}

export interface SceneSpec {
  seed: number;
  cylinders: Cylinder[];
}

export interface DatasetSplit {
  split: string;
  config: ProblemConfig;
  configHash: string;
  scenes: SceneSpec[];
  contrasts: CVec[]; // ground-truth contrast images
  measurements: CVec[]; // noiseless cascaded measurements
  manifest: Manifest;
}

function toComplexRows(shape: number[], data: Float32Array): CVec[] {
  const [count, length] = shape;
  const rows: CVec[] = [];
  for (let i = 0; i < count; i++) {
    const row = cvec(length);
    const base = i * length * 2;
    for (let j = 0; j < length; j++) {
      row.re[j] = data[base + 2 * j];
      row.im[j] = data[base + 2 * j + 1];
    }
    rows.push(row);
  }
  return rows;
}

export function loadSplit(splitDir: string): DatasetSplit {
  const manifestPath = path.join(splitDir, "manifest.json");
  if (!fs.existsSync(manifestPath)) {
    throw new Error(`${splitDir}: no manifest.json (incomplete or missing split)`);
  }
  const { tensors, manifest } = readTensors(splitDir);
  const meta = manifest.meta as Record<string, unknown>;
  const scenes = JSON.parse(
    fs.readFileSync(path.join(splitDir, "scenes.json"), "utf-8"),
  ) as SceneSpec[];

  const contrasts = tensors.get("contrasts");
  const measurements = tensors.get("measurements");
  if (!contrasts || !measurements) {
    throw new Error(`${splitDir}: manifest is missing contrasts/measurements`);
  }
  if (
    contrasts.dtype !== "complex64" ||
    measurements.dtype !== "complex64" ||
    numel(contrasts.shape) === 0
  ) {
    throw new Error(`${splitDir}: unexpected tensor layout`);
  }
  const split = {
    split: String(meta["split"]),
    config: configFromMeta(meta),
    configHash: String(meta["config_hash"]),
    scenes,
    contrasts: toComplexRows(contrasts.shape, contrasts.data),
    measurements: toComplexRows(measurements.shape, measurements.data),
    manifest,
  };
  const count = Number(meta["count"]);
  if (
    split.scenes.length !== count ||
    split.contrasts.length !== count ||
    split.measurements.length !== count
  ) {
    throw new Error(`${splitDir}: inconsistent example counts`);
  }
  return split;
}
