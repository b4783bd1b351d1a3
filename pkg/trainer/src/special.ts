/**
 * Hankel functions of the second kind, orders 0 and 1, for real x > 0.
 *
 * Same construction as the reconstruction package: ascending power series
 * below the crossover, Hankel's asymptotic expansion above it, so the two
 * implementations agree to float64 rounding.
 */

const EULER_GAMMA = 0.5772156649015328606;
const CROSSOVER = 15.0;
const SERIES_TERMS = 40;
const ASYMPT_TERMS = 28;

const HARMONIC = new Float64Array(SERIES_TERMS + 2);
for (let k = 1; k < HARMONIC.length; k++) {
  HARMONIC[k] = HARMONIC[k - 1] + 1.0 / k;
}

function seriesJY(x: number): { j0: number; y0: number; j1: number; y1: number } {
  const q = 0.25 * x * x;
  const logHalfX = Math.log(0.5 * x);

  let j0 = 1.0;
  let y0Sum = 0.0;
  let term = 1.0;
  for (let k = 1; k <= SERIES_TERMS; k++) {
    term = (-term * q) / (k * k);
    j0 += term;
    y0Sum += term * HARMONIC[k];
  }
  const y0 = (2.0 / Math.PI) * ((logHalfX + EULER_GAMMA) * j0 - y0Sum);

  let s = 1.0;
  let j1Sum = 1.0;
  let y1Sum = HARMONIC[1]; // (H_0 + H_1) * s_0
  for (let k = 1; k <= SERIES_TERMS; k++) {
    s = (-s * q) / (k * (k + 1));
    j1Sum += s;
    y1Sum += s * (HARMONIC[k] + HARMONIC[k + 1]);
  }
  const j1 = 0.5 * x * j1Sum;
  const y1 =
    (2.0 / Math.PI) * (logHalfX + EULER_GAMMA) * j1 -
    2.0 / (Math.PI * x) -
    (x / (2.0 * Math.PI)) * y1Sum;
  return { j0, y0, j1, y1 };
}

function asymptoticH2(order: number, x: number): { re: number; im: number } {
  const nu4 = 4.0 * order * order;
  // sum_k (-j)^k a_k / x^k with a_k = a_{k-1} (4 nu^2 - (2k-1)^2) / (8k)
  let accRe = 1.0;
  let accIm = 0.0;
  let termRe = 1.0;
  let termIm = 0.0;
  const invX = 1.0 / x;
  for (let k = 1; k <= ASYMPT_TERMS; k++) {
    const f = ((nu4 - (2 * k - 1) ** 2) / (8.0 * k)) * invX;
    // term *= -j * f
    const nre = termIm * f;
    const nim = -termRe * f;
    termRe = nre;
    termIm = nim;
    accRe += termRe;
    accIm += termIm;
  }
  const phase = x - 0.5 * order * Math.PI - 0.25 * Math.PI;
  const amp = Math.sqrt(2.0 / (Math.PI * x));
  // amp * exp(-j phase) * acc
  const c = Math.cos(phase);
  const s = -Math.sin(phase);
  return { re: amp * (c * accRe - s * accIm), im: amp * (c * accIm + s * accRe) };
}

export function hankel2(order: 0 | 1, x: number): { re: number; im: number } {
  if (order !== 0 && order !== 1) {
    throw new Error(`order must be 0 or 1, got ${order}`);
  }
  if (!Number.isFinite(x) || x <= 0) {
    throw new Error("hankel2 requires finite x > 0 (logarithmic singularity at 0)");
  }
  if (x <= CROSSOVER) {
    const { j0, y0, j1, y1 } = seriesJY(x);
    return order === 0 ? { re: j0, im: -y0 } : { re: j1, im: -y1 };
  }
  return asymptoticH2(order, x);
}
