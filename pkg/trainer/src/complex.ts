/** Dense complex linear algebra on split re/im Float64Arrays. */

export interface CVec {
  re: Float64Array;
  im: Float64Array;
}

export interface CMat {
  rows: number;
  cols: number;
  re: Float64Array; // row-major
  im: Float64Array;
}

export function cvec(n: number): CVec {
  return { re: new Float64Array(n), im: new Float64Array(n) };
}

export function cmat(rows: number, cols: number): CMat {
  return {
    rows,
    cols,
    re: new Float64Array(rows * cols),
    im: new Float64Array(rows * cols),
  };
}

export function clone(v: CVec): CVec {
  return { re: v.re.slice(), im: v.im.slice() };
}

export function norm(v: CVec): number {
  let s = 0;
  for (let i = 0; i < v.re.length; i++) {
    s += v.re[i] * v.re[i] + v.im[i] * v.im[i];
  }
  return Math.sqrt(s);
}

/** conj(a) . b */
export function vdot(a: CVec, b: CVec): { re: number; im: number } {
  let re = 0;
  let im = 0;
  for (let i = 0; i < a.re.length; i++) {
    re += a.re[i] * b.re[i] + a.im[i] * b.im[i];
    im += a.re[i] * b.im[i] - a.im[i] * b.re[i];
  }
  return { re, im };
}

/** out = m v */
export function matvec(m: CMat, v: CVec, out?: CVec): CVec {
  const y = out ?? cvec(m.rows);
  for (let r = 0; r < m.rows; r++) {
    let sre = 0;
    let sim = 0;
    const base = r * m.cols;
    for (let c = 0; c < m.cols; c++) {
      const mre = m.re[base + c];
      const mim = m.im[base + c];
      sre += mre * v.re[c] - mim * v.im[c];
      sim += mre * v.im[c] + mim * v.re[c];
    }
    y.re[r] = sre;
    y.im[r] = sim;
  }
  return y;
}

/** out = m^H v (conjugate transpose) */
export function hermvec(m: CMat, v: CVec, out?: CVec): CVec {
  const y = out ?? cvec(m.cols);
  y.re.fill(0);
  y.im.fill(0);
  for (let r = 0; r < m.rows; r++) {
    const base = r * m.cols;
    const vre = v.re[r];
    const vim = v.im[r];
    for (let c = 0; c < m.cols; c++) {
      const mre = m.re[base + c];
      const mim = m.im[base + c]; // conj: -mim
      y.re[c] += mre * vre + mim * vim;
      y.im[c] += mre * vim - mim * vre;
    }
  }
  return y;
}

/** y = y + alpha * x, complex alpha */
export function axpy(
  alphaRe: number,
  alphaIm: number,
  x: CVec,
  y: CVec,
): void {
  for (let i = 0; i < x.re.length; i++) {
    y.re[i] += alphaRe * x.re[i] - alphaIm * x.im[i];
    y.im[i] += alphaRe * x.im[i] + alphaIm * x.re[i];
  }
}

export function scale(v: CVec, s: number): void {
  for (let i = 0; i < v.re.length; i++) {
    v.re[i] *= s;
    v.im[i] *= s;
  }
}

export function sub(a: CVec, b: CVec): CVec {
  const out = cvec(a.re.length);
  for (let i = 0; i < a.re.length; i++) {
    out.re[i] = a.re[i] - b.re[i];
    out.im[i] = a.im[i] - b.im[i];
  }
  return out;
}

/** complex division a / b for scalars */
export function cdiv(
  aRe: number,
  aIm: number,
  bRe: number,
  bIm: number,
): { re: number; im: number } {
  const d = bRe * bRe + bIm * bIm;
  return { re: (aRe * bRe + aIm * bIm) / d, im: (aIm * bRe - aRe * bIm) / d };
}
