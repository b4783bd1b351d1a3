/**
 * Trend assertions over the checked-in evaluation reports in results/.
 *
 * The reports come from a noise-matched reduced-scale run (16x16 grid,
 * 8 tx / 16 rx, 300/48/64 examples, stage epochs 12/10/10, seed 0): for each
 * SNR condition, three stage networks were trained in order and TBIM/SBIM
 * were evaluated on the same 64 test examples.
 */

import * as fs from "node:fs";
import * as path from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import { EvaluationReport } from "../src/evaluate.js";

const RESULTS = fileURLToPath(new URL("../results", import.meta.url));
const SNRS = ["noiseless", "25", "15", "10"] as const;

function load(method: string, snr: string): EvaluationReport {
  const file = path.join(RESULTS, `${method}-${snr}.json`);
  return JSON.parse(fs.readFileSync(file, "utf-8")) as EvaluationReport;
}

describe("reduced-scale trend results", () => {
  it("reports cover both methods at every SNR on the same test set", () => {
    for (const snr of SNRS) {
      const tbim = load("tbim", snr);
      const sbim = load("sbim", snr);
      expect(tbim.method).toBe("tbim");
      expect(sbim.method).toBe("sbim");
      expect(tbim.examples).toBe(64);
      expect(sbim.examples).toBe(64);
      expect(tbim.configHash).toBe(sbim.configHash);
      expect(tbim.noiseSeed).toBe(sbim.noiseSeed);
      expect(tbim.mrnePerStepPercent).toHaveLength(3);
      for (const v of tbim.rnePercent) expect(Number.isFinite(v)).toBe(true);
    }
  });

  it("TBIM error strictly decreases with each trained Born step", () => {
    for (const snr of SNRS) {
      const steps = load("tbim", snr).mrnePerStepPercent;
      for (let i = 1; i < steps.length; i++) {
        expect(steps[i]).toBeLessThan(steps[i - 1]);
      }
    }
  });

  it("final-step TBIM error degrades monotonically with noise", () => {
    const finals = SNRS.map((snr) => {
      const steps = load("tbim", snr).mrnePerStepPercent;
      return steps[steps.length - 1];
    });
    // ordered noiseless, 25 dB, 15 dB, 10 dB: error must rise as SNR drops
    for (let i = 1; i < finals.length; i++) {
      expect(finals[i]).toBeGreaterThan(finals[i - 1]);
    }
  });

  it("TBIM beats the sparse baseline at the final step under every condition", () => {
    for (const snr of SNRS) {
      const tbim = load("tbim", snr).mrnePerStepPercent.at(-1)!;
      const sbim = load("sbim", snr).mrnePerStepPercent.at(-1)!;
      expect(tbim).toBeLessThan(sbim);
    }
  });

  it("noiseless final-step MRNE meets the 20% target", () => {
    const steps = load("tbim", "noiseless").mrnePerStepPercent;
    expect(steps.at(-1)!).toBeLessThanOrEqual(20);
  });
});
