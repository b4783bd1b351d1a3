import * as path from "node:path";

import { describe, expect, it } from "vitest";

import { loadSplit } from "../src/dataset.js";
import { nMeasurements, nPixels } from "../src/config.js";
import { TESTDATA } from "./helpers.js";

const DATASET = path.join(TESTDATA, "dataset");

describe("dataset splits", () => {
  it("loads a split generated by the reconstruction package", () => {
    const split = loadSplit(path.join(DATASET, "train"));
    expect(split.split).toBe("train");
    expect(split.scenes.length).toBe(24);
    expect(split.contrasts.length).toBe(24);
    expect(split.measurements.length).toBe(24);
    expect(split.config.grid_nx).toBe(8);
    expect(split.contrasts[0].re.length).toBe(nPixels(split.config));
    expect(split.measurements[0].re.length).toBe(nMeasurements(split.config));
    expect(split.configHash).toMatch(/^[0-9a-f]{16}$/);
  });

  it("shares a config hash across splits and keeps split-disjoint seeds", () => {
    const train = loadSplit(path.join(DATASET, "train"));
    const valid = loadSplit(path.join(DATASET, "valid"));
    const test = loadSplit(path.join(DATASET, "test"));
    expect(valid.configHash).toBe(train.configHash);
    expect(test.configHash).toBe(train.configHash);
    const seeds = new Set([
      ...train.scenes.map((s) => s.seed),
      ...valid.scenes.map((s) => s.seed),
      ...test.scenes.map((s) => s.seed),
    ]);
    expect(seeds.size).toBe(24 + 8 + 8);
  });

  it("exposes scene geometry with at least one cylinder each", () => {
    const split = loadSplit(path.join(DATASET, "test"));
    for (const scene of split.scenes) {
      expect(scene.cylinders.length).toBeGreaterThanOrEqual(1);
      for (const cyl of scene.cylinders) {
        expect(cyl.radius).toBeGreaterThan(0);
        expect(cyl.contrast).toBeGreaterThan(0);
      }
    }
  });

  it("rejects a directory without a manifest", () => {
    expect(() => loadSplit(path.join(DATASET, "nope"))).toThrow(/manifest/);
  });
});
