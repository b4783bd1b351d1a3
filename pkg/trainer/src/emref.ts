/**
 * Reference electromagnetic pipeline mirroring the reconstruction package:
 * Green's operators, incident fields, BiCGStab state solves, observation
 * assembly and power iteration. Float64 throughout so the two components
 * agree to accumulation error.
 */

import {
  CMat,
  CVec,
  axpy,
  cdiv,
  clone,
  cmat,
  cvec,
  hermvec,
  matvec,
  norm,
  scale,
  vdot,
} from "./complex.js";
import { ProblemConfig, k0 as wavenumber, nPixels } from "./config.js";
import { hankel2 } from "./special.js";

export interface GreensOperators {
  gRx: CMat; // (rx_count, N)
  aDom: CMat; // (N, N)
  k0: number;
}

export interface FieldSet {
  /** per-transmitter field vectors, length tx_count */
  values: CVec[];
  kind: "incident" | "total";
}

export function pixelCenters(config: ProblemConfig): Float64Array {
  // (N, 2) row-major over (iy, ix), centered at the origin
  const dd = config.pixel_size_m;
  const out = new Float64Array(nPixels(config) * 2);
  let i = 0;
  for (let iy = 0; iy < config.grid_ny; iy++) {
    const y = (iy + 0.5) * dd - 0.5 * config.grid_ny * dd;
    for (let ix = 0; ix < config.grid_nx; ix++) {
      out[i++] = (ix + 0.5) * dd - 0.5 * config.grid_nx * dd;
      out[i++] = y;
    }
  }
  return out;
}

export function circlePositions(count: number, radius: number): Float64Array {
  const out = new Float64Array(count * 2);
  for (let k = 0; k < count; k++) {
    const ang = (2.0 * Math.PI * k) / count;
    out[2 * k] = radius * Math.cos(ang);
    out[2 * k + 1] = radius * Math.sin(ang);
  }
  return out;
}

/** k0 * dd^2 * H2_0(k0 d) / (4j); division by 4j maps (re, im) -> (im/4, -re/4) */
function coupling(k0: number, dd: number, dist: number): { re: number; im: number } {
  const h = hankel2(0, k0 * dist);
  const f = k0 * dd * dd * 0.25;
  return { re: f * h.im, im: -f * h.re };
}

function selfTerm(k0: number, dd: number): { re: number; im: number } {
  const a = dd / Math.sqrt(Math.PI);
  const h1 = hankel2(1, k0 * a);
  // k0/(4j) * (2 pi a / k0 * H2_1(k0 a) - 4j / k0^2)
  const c = (2.0 * Math.PI * a) / k0;
  const innerRe = c * h1.re;
  const innerIm = c * h1.im - 4.0 / (k0 * k0);
  return { re: (k0 / 4.0) * innerIm, im: -(k0 / 4.0) * innerRe };
}

export function buildGreens(config: ProblemConfig): GreensOperators {
  const k0 = wavenumber(config);
  const dd = config.pixel_size_m;
  const centers = pixelCenters(config);
  const n = nPixels(config);

  const rx = circlePositions(config.rx_count, config.transceiver_radius_m);
  const gRx = cmat(config.rx_count, n);
  for (let m = 0; m < config.rx_count; m++) {
    for (let c = 0; c < n; c++) {
      const dx = rx[2 * m] - centers[2 * c];
      const dy = rx[2 * m + 1] - centers[2 * c + 1];
      const d = Math.hypot(dx, dy);
      if (d < 1e-9) throw new Error("external point coincides with a pixel center");
      const g = coupling(k0, dd, d);
      gRx.re[m * n + c] = g.re;
      gRx.im[m * n + c] = g.im;
    }
  }

  const aDom = cmat(n, n);
  const diag = selfTerm(k0, dd);
  for (let r = 0; r < n; r++) {
    for (let c = 0; c < n; c++) {
      if (r === c) {
        aDom.re[r * n + c] = diag.re;
        aDom.im[r * n + c] = diag.im;
      } else {
        const dx = centers[2 * r] - centers[2 * c];
        const dy = centers[2 * r + 1] - centers[2 * c + 1];
        const g = coupling(k0, dd, Math.hypot(dx, dy));
        aDom.re[r * n + c] = g.re;
        aDom.im[r * n + c] = g.im;
      }
    }
  }
  return { gRx, aDom, k0 };
}

export function incidentFields(config: ProblemConfig): FieldSet {
  const k0 = wavenumber(config);
  const centers = pixelCenters(config);
  const n = nPixels(config);
  const tx = circlePositions(config.tx_count, config.transceiver_radius_m);
  const values: CVec[] = [];
  for (let t = 0; t < config.tx_count; t++) {
    const v = cvec(n);
    for (let c = 0; c < n; c++) {
      const dx = tx[2 * t] - centers[2 * c];
      const dy = tx[2 * t + 1] - centers[2 * c + 1];
      const d = Math.hypot(dx, dy);
      if (d < 1e-9) throw new Error("transmitter coincides with a pixel center");
      const h = hankel2(0, k0 * d);
      v.re[c] = 0.25 * h.im; // H/(4j)
      v.im[c] = -0.25 * h.re;
    }
    values.push(v);
  }
  return { values, kind: "incident" };
}

const BREAKDOWN_EPS = 1e-30;

export function bicgstab(
  apply: (v: CVec) => CVec,
  b: CVec,
  x0?: CVec,
  maxIters = 100,
  tol = 0.0,
): { x: CVec; relres: number } {
  const n = b.re.length;
  let x = x0 ? clone(x0) : cvec(n);
  const bNorm = norm(b);
  if (bNorm === 0) return { x: cvec(n), relres: 0 };

  let r = sub2(b, apply(x));
  if (norm(r) === 0 || norm(r) / bNorm <= tol) {
    return { x, relres: norm(r) / bNorm };
  }

  let rHat = clone(r);
  let rho = { re: 1, im: 0 };
  let alpha = { re: 1, im: 0 };
  let omega = { re: 1, im: 0 };
  let v = cvec(n);
  let p = cvec(n);
  let restarts = 0;
  let it = 0;

  const restart = () => {
    r = sub2(b, apply(x));
    rHat = clone(r);
    rho = { re: 1, im: 0 };
    alpha = { re: 1, im: 0 };
    omega = { re: 1, im: 0 };
    v = cvec(n);
    p = cvec(n);
  };

  while (it < maxIters) {
    const rhoNew = vdot(rHat, r);
    if (Math.hypot(rhoNew.re, rhoNew.im) < BREAKDOWN_EPS) {
      if (restarts >= 1) break;
      restarts++;
      restart();
      continue;
    }
    const ratio = cdiv(rhoNew.re, rhoNew.im, rho.re, rho.im);
    const ao = cdiv(alpha.re, alpha.im, omega.re, omega.im);
    const beta = {
      re: ratio.re * ao.re - ratio.im * ao.im,
      im: ratio.re * ao.im + ratio.im * ao.re,
    };
    rho = rhoNew;
    // p = r + beta * (p - omega v)
    const pmov = clone(p);
    axpy(-omega.re, -omega.im, v, pmov);
    const pNew = clone(r);
    axpy(beta.re, beta.im, pmov, pNew);
    p = pNew;
    v = apply(p);
    const denom = vdot(rHat, v);
    if (Math.hypot(denom.re, denom.im) < BREAKDOWN_EPS) {
      if (restarts >= 1) break;
      restarts++;
      restart();
      continue;
    }
    alpha = cdiv(rho.re, rho.im, denom.re, denom.im);
    const s = clone(r);
    axpy(-alpha.re, -alpha.im, v, s);
    const tVec = apply(s);
    const tt = vdot(tVec, tVec).re;
    if (tt < BREAKDOWN_EPS) {
      axpy(alpha.re, alpha.im, p, x);
      r = s;
      it++;
      if (norm(r) / bNorm <= tol) break;
      if (restarts >= 1) break;
      restarts++;
      rHat = clone(r);
      rho = { re: 1, im: 0 };
      alpha = { re: 1, im: 0 };
      omega = { re: 1, im: 0 };
      v = cvec(n);
      p = cvec(n);
      continue;
    }
    const ts = vdot(tVec, s);
    omega = { re: ts.re / tt, im: ts.im / tt };
    axpy(alpha.re, alpha.im, p, x);
    axpy(omega.re, omega.im, s, x);
    r = clone(s);
    axpy(-omega.re, -omega.im, tVec, r);
    it++;
    if (norm(r) / bNorm <= tol) break;
    if (Math.hypot(omega.re, omega.im) < BREAKDOWN_EPS) {
      if (restarts >= 1) break;
      restarts++;
      restart();
    }
  }
  const relres = norm(sub2(b, apply(x))) / bNorm;
  return { x, relres };
}

function sub2(a: CVec, b: CVec): CVec {
  const out = cvec(a.re.length);
  for (let i = 0; i < a.re.length; i++) {
    out.re[i] = a.re[i] - b.re[i];
    out.im[i] = a.im[i] - b.im[i];
  }
  return out;
}

export const ACCURATE_ITERS = 500;
export const ACCURATE_TOL = 1e-10;

/** Solve (I + A D(t)) e_tot = e_inc per transmitter, x0 = e_inc. */
export function solveState(
  ops: GreensOperators,
  t: CVec,
  eInc: FieldSet,
  nIters: number,
  tol = 0.0,
): FieldSet {
  if (eInc.kind !== "incident") throw new Error("solveState expects incident fields");
  const n = t.re.length;
  const tmp = cvec(n);
  const apply = (v: CVec): CVec => {
    for (let i = 0; i < n; i++) {
      tmp.re[i] = t.re[i] * v.re[i] - t.im[i] * v.im[i];
      tmp.im[i] = t.re[i] * v.im[i] + t.im[i] * v.re[i];
    }
    const out = matvec(ops.aDom, tmp);
    for (let i = 0; i < n; i++) {
      out.re[i] += v.re[i];
      out.im[i] += v.im[i];
    }
    return out;
  };
  const values = eInc.values.map(
    (e) => bicgstab(apply, e, e, nIters, tol).x,
  );
  return { values, kind: "total" };
}

/** Cascade gRx * D(e_tot_tr) over transmitters, transmitter-major rows. */
export function assembleObservation(ops: GreensOperators, eTot: FieldSet): CMat {
  if (eTot.kind !== "total") throw new Error("assembleObservation expects total fields");
  const nRx = ops.gRx.rows;
  const n = ops.gRx.cols;
  const h = cmat(nRx * eTot.values.length, n);
  for (let tr = 0; tr < eTot.values.length; tr++) {
    const e = eTot.values[tr];
    for (let m = 0; m < nRx; m++) {
      const src = m * n;
      const dst = (tr * nRx + m) * n;
      for (let c = 0; c < n; c++) {
        const gre = ops.gRx.re[src + c];
        const gim = ops.gRx.im[src + c];
        h.re[dst + c] = gre * e.re[c] - gim * e.im[c];
        h.im[dst + c] = gre * e.im[c] + gim * e.re[c];
      }
    }
  }
  return h;
}

export function scatteredFields(ops: GreensOperators, t: CVec, eTot: FieldSet): CVec {
  const h = assembleObservation(ops, eTot);
  return matvec(h, t);
}

// ---------------------------------------------------------------- randomness

const SM64_GAMMA = 0x9e3779b97f4a7c15n;
const SM64_MUL1 = 0xbf58476d1ce4e5b9n;
const SM64_MUL2 = 0x94d049bb133111ebn;
const MASK64 = (1n << 64n) - 1n;

/** splitmix64 uniforms in [0, 1), identical stream to the reconstruction package. */
export function splitmix64Stream(seed: number | bigint, count: number): Float64Array {
  let state = BigInt(seed) & MASK64;
  const out = new Float64Array(count);
  for (let i = 0; i < count; i++) {
    state = (state + SM64_GAMMA) & MASK64;
    let z = state;
    z = ((z ^ (z >> 30n)) * SM64_MUL1) & MASK64;
    z = ((z ^ (z >> 27n)) * SM64_MUL2) & MASK64;
    z = z ^ (z >> 31n);
    out[i] = Number(z >> 11n) * 2 ** -53;
  }
  return out;
}

/** Deterministic complex unit start vector shared with the primary component. */
export function startVector(n: number, seed: number): CVec {
  const u = splitmix64Stream(seed, 2 * n);
  const v = cvec(n);
  for (let i = 0; i < n; i++) {
    const u1 = Math.max(u[2 * i], 1e-300);
    const u2 = u[2 * i + 1];
    const r = Math.sqrt(-2.0 * Math.log(u1));
    v.re[i] = r * Math.cos(2.0 * Math.PI * u2);
    v.im[i] = r * Math.sin(2.0 * Math.PI * u2);
  }
  scale(v, 1.0 / norm(v));
  return v;
}

export function powerIteration(
  h: CMat,
  nPow: number,
  seed = 0,
): { gamma: number; sigma: number } {
  if (nPow < 1) throw new Error("nPow must be >= 1");
  let v = startVector(h.cols, seed);
  for (let k = 0; k < nPow; k++) {
    const w = hermvec(h, matvec(h, v));
    const nrm = norm(w);
    if (nrm === 0) throw new Error("power iteration on a zero operator: gamma undefined");
    scale(w, 1.0 / nrm);
    v = w;
  }
  const sigma2 = norm(hermvec(h, matvec(h, v)));
  if (sigma2 === 0) throw new Error("power iteration on a zero operator: gamma undefined");
  return { gamma: 1.0 / sigma2, sigma: Math.sqrt(sigma2) };
}

// ------------------------------------------------------------------- solvers

export function landweberStep(h: CMat, t: CVec, eMea: CVec, gamma: number): CVec {
  const r = matvec(h, t);
  for (let i = 0; i < r.re.length; i++) {
    r.re[i] -= eMea.re[i];
    r.im[i] -= eMea.im[i];
  }
  const g = hermvec(h, r);
  const out = clone(t);
  axpy(-gamma, 0, g, out);
  return out;
}

export function softThreshold(z: CVec, delta: number): CVec {
  const out = cvec(z.re.length);
  for (let i = 0; i < z.re.length; i++) {
    const mag = Math.hypot(z.re[i], z.im[i]);
    if (mag > delta) {
      const s = (mag - delta) / mag;
      out.re[i] = z.re[i] * s;
      out.im[i] = z.im[i] * s;
    }
  }
  return out;
}

export function rne(x: CVec, xRef: CVec): number {
  let num = 0;
  let den = 0;
  for (let i = 0; i < x.re.length; i++) {
    const dr = x.re[i] - xRef.re[i];
    const di = x.im[i] - xRef.im[i];
    num += dr * dr + di * di;
    den += xRef.re[i] * xRef.re[i] + xRef.im[i] * xRef.im[i];
  }
  if (den === 0) throw new Error("reference vector must be nonzero");
  return (100.0 * num) / den;
}

/** Circular complex white Gaussian noise at the given SNR (dB), seeded. */
export function addNoise(e: CVec, snrDb: number | "noiseless", seed: number): CVec {
  if (snrDb === "noiseless") return clone(e);
  const n = e.re.length;
  const power = norm(e) ** 2;
  const sigma2 = power / (n * 10 ** (snrDb / 10));
  const amp = Math.sqrt(sigma2 / 2.0);
  const u = splitmix64Stream(BigInt(seed) + (1n << 62n), 2 * n);
  const out = clone(e);
  for (let i = 0; i < n; i++) {
    const u1 = Math.max(u[2 * i], 1e-300);
    const u2 = u[2 * i + 1];
    const r = Math.sqrt(-2.0 * Math.log(u1));
    out.re[i] += amp * r * Math.cos(2.0 * Math.PI * u2);
    out.im[i] += amp * r * Math.sin(2.0 * Math.PI * u2);
  }
  return out;
}
