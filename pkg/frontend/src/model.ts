/** Forward passes for the masked local network.
 *
 * Two variants: a float64 path used by training (keeps every intermediate
 * for backprop), and a float32-exact path that mirrors the codec's frozen
 * arithmetic op for op -- products accumulated in (row, col, channel)
 * order, dot product before bias, ELU/tanh evaluated in float64 and
 * rounded to float32 -- so an exported model produces byte-identical
 * parameters in both implementations (up to 1-ulp libm differences).
 */

import { Config, Weights, kernelHeight, kernelWidth, paramsPerPixel } from "./weights.js";

export const MEAN_SCALE = 127.5;
export const MEAN_BIAS = 127.5;
export const LOG_SCALE_OFFSET = 4.848116397857666; // float32(log(127.5))
export const MIN_RAW_LOG_SCALE = -7.0;
export const COEFF_SCALE = 127.5;
export const PIXEL_SCALE = Math.fround(1 / 255);

const f = Math.fround;

export function elu(x: number): number {
  return x > 0 ? x : Math.expm1(x);
}

export function eluF32(x: number): number {
  return x > 0 ? x : f(Math.expm1(x));
}

function eluPrime(x: number): number {
  return x > 0 ? 1 : Math.exp(x);
}

/** Byte-unit mixture parameters for one pixel. */
export interface Params {
  logits: number[];
  means: number[][];     // [C][K]
  logScales: number[][]; // [C][K]
  coeffs: number[][] | null; // [3][K]
}

export function rawToParams(c: Config, raw: ArrayLike<number>, exact32: boolean): Params {
  const K = c.mixtures;
  const C = c.channels;
  const logits = Array.from({ length: K }, (_, k) => raw[k]);
  const means: number[][] = [];
  const logScales: number[][] = [];
  for (let ch = 0; ch < C; ch++) {
    const m: number[] = [];
    const s: number[] = [];
    for (let k = 0; k < K; k++) {
      const mr = raw[K + ch * K + k];
      const sr = Math.max(raw[K + C * K + ch * K + k], MIN_RAW_LOG_SCALE);
      if (exact32) {
        m.push(f(f(MEAN_SCALE * mr) + MEAN_BIAS));
        s.push(f(sr + LOG_SCALE_OFFSET));
      } else {
        m.push(MEAN_SCALE * mr + MEAN_BIAS);
        s.push(sr + LOG_SCALE_OFFSET);
      }
    }
    means.push(m);
    logScales.push(s);
  }
  let coeffs: number[][] | null = null;
  if (C === 3) {
    coeffs = [[], [], []];
    for (let t = 0; t < 3; t++) {
      for (let k = 0; k < K; k++) {
        const cr = raw[K + 6 * K + t * K + k];
        coeffs[t].push(exact32 ? f(COEFF_SCALE * f(Math.tanh(cr))) : COEFF_SCALE * Math.tanh(cr));
      }
    }
  }
  return { logits, means, logScales, coeffs };
}

/** Training forward: float64, returns every intermediate for backprop.
 * patch is (h+1, 2h+1, C) byte values flattened row-major. */
export interface Trace {
  xn: Float64Array;       // normalized patch
  zPre: Float64Array;     // first conv + bias
  z0: Float64Array;       // elu(zPre)
  blocks: {
    input: Float64Array;  // z entering the block
    za: Float64Array;     // elu(input)
    t: Float64Array;      // za . w1 + b1
    ta: Float64Array;     // elu(t)
    v: Float64Array;      // ta . w2 + b2
  }[];
  zOut: Float64Array;     // block stack output
  zh: Float64Array;       // elu(zOut)
  raw: Float64Array;      // head outputs
}

export function forward(c: Config, w: Weights, patch: Float64Array): Trace {
  const hid = c.hidden;
  const n = kernelHeight(c) * kernelWidth(c) * c.channels;
  const xn = new Float64Array(n);
  for (let i = 0; i < n; i++) xn[i] = patch[i] * PIXEL_SCALE;

  const zPre = new Float64Array(hid);
  const k = w.firstKernel.data;
  for (let o = 0; o < hid; o++) {
    let acc = 0;
    for (let cell = 0; cell < n; cell++) acc += xn[cell] * k[cell * hid + o];
    zPre[o] = acc + w.firstBias.data[o];
  }
  const z0 = zPre.map(elu);

  let z = z0;
  const blocks: Trace["blocks"] = [];
  for (const b of w.blocks) {
    const input = z;
    const za = input.map(elu);
    const t = new Float64Array(hid);
    for (let o = 0; o < hid; o++) {
      let acc = 0;
      for (let ci = 0; ci < hid; ci++) acc += za[ci] * b.w1.data[ci * hid + o];
      t[o] = acc + b.b1.data[o];
    }
    const ta = t.map(elu);
    const v = new Float64Array(hid);
    for (let o = 0; o < hid; o++) {
      let acc = 0;
      for (let ci = 0; ci < hid; ci++) acc += ta[ci] * b.w2.data[ci * hid + o];
      v[o] = acc + b.b2.data[o];
    }
    const zNext = new Float64Array(hid);
    for (let o = 0; o < hid; o++) zNext[o] = input[o] + v[o];
    blocks.push({ input, za, t, ta, v });
    z = zNext;
  }

  const zh = z.map(elu);
  const P = paramsPerPixel(c);
  const raw = new Float64Array(P);
  for (let o = 0; o < P; o++) {
    let acc = 0;
    for (let ci = 0; ci < hid; ci++) acc += zh[ci] * w.headW.data[ci * P + o];
    raw[o] = acc + w.headB.data[o];
  }
  return { xn, zPre, z0, blocks, zOut: z, zh, raw };
}

/** Gradient container mirroring the weight layout. */
export interface Grads {
  firstKernel: Float64Array;
  firstBias: Float64Array;
  blocks: { w1: Float64Array; b1: Float64Array; w2: Float64Array; b2: Float64Array }[];
  headW: Float64Array;
  headB: Float64Array;
}

export function zeroGrads(c: Config, w: Weights): Grads {
  return {
    firstKernel: new Float64Array(w.firstKernel.data.length),
    firstBias: new Float64Array(w.firstBias.data.length),
    blocks: w.blocks.map((b) => ({
      w1: new Float64Array(b.w1.data.length),
      b1: new Float64Array(b.b1.data.length),
      w2: new Float64Array(b.w2.data.length),
      b2: new Float64Array(b.b2.data.length),
    })),
    headW: new Float64Array(w.headW.data.length),
    headB: new Float64Array(w.headB.data.length),
  };
}

/** Accumulate d(loss)/d(weights) for one patch given d(loss)/d(raw). */
export function backward(
  c: Config, w: Weights, trace: Trace, dRaw: Float64Array, grads: Grads,
): void {
  const hid = c.hidden;
  const P = paramsPerPixel(c);
  const dZh = new Float64Array(hid);
  for (let ci = 0; ci < hid; ci++) {
    let acc = 0;
    for (let o = 0; o < P; o++) {
      acc += dRaw[o] * w.headW.data[ci * P + o];
      grads.headW[ci * P + o] += trace.zh[ci] * dRaw[o];
    }
    dZh[ci] = acc;
  }
  for (let o = 0; o < P; o++) grads.headB[o] += dRaw[o];

  let dZ = new Float64Array(hid);
  for (let i = 0; i < hid; i++) dZ[i] = dZh[i] * eluPrime(trace.zOut[i]);

  for (let bi = w.blocks.length - 1; bi >= 0; bi--) {
    const b = w.blocks[bi];
    const tr = trace.blocks[bi];
    const g = grads.blocks[bi];
    // z_next = input + v;  v = elu(t) . w2 + b2;  t = elu(input) . w1 + b1
    const dV = dZ; // residual add passes dZ to both v and input
    const dTa = new Float64Array(hid);
    for (let ci = 0; ci < hid; ci++) {
      let acc = 0;
      for (let o = 0; o < hid; o++) {
        acc += dV[o] * b.w2.data[ci * hid + o];
        g.w2[ci * hid + o] += tr.ta[ci] * dV[o];
      }
      dTa[ci] = acc;
    }
    for (let o = 0; o < hid; o++) g.b2[o] += dV[o];
    const dT = new Float64Array(hid);
    for (let i = 0; i < hid; i++) dT[i] = dTa[i] * eluPrime(tr.t[i]);
    const dZa = new Float64Array(hid);
    for (let ci = 0; ci < hid; ci++) {
      let acc = 0;
      for (let o = 0; o < hid; o++) {
        acc += dT[o] * b.w1.data[ci * hid + o];
        g.w1[ci * hid + o] += tr.za[ci] * dT[o];
      }
      dZa[ci] = acc;
    }
    for (let o = 0; o < hid; o++) g.b1[o] += dT[o];
    const dInput = new Float64Array(hid);
    for (let i = 0; i < hid; i++) {
      dInput[i] = dZ[i] + dZa[i] * eluPrime(tr.input[i]);
    }
    dZ = dInput;
  }

  const dZPre = new Float64Array(hid);
  for (let i = 0; i < hid; i++) dZPre[i] = dZ[i] * eluPrime(trace.zPre[i]);
  const n = trace.xn.length;
  for (let cell = 0; cell < n; cell++) {
    const x = trace.xn[cell];
    if (x !== 0) {
      for (let o = 0; o < hid; o++) {
        grads.firstKernel[cell * hid + o] += x * dZPre[o];
      }
    }
  }
  for (let o = 0; o < hid; o++) grads.firstBias[o] += dZPre[o];
}

/** Float32-exact forward mirroring the codec: used for parity fixtures. */
export function forwardF32(c: Config, w: Weights, patch: ArrayLike<number>): Params {
  const hid = c.hidden;
  const n = kernelHeight(c) * kernelWidth(c) * c.channels;
  const xn = new Float32Array(n);
  for (let i = 0; i < n; i++) xn[i] = f(f(patch[i]) * PIXEL_SCALE);

  const k32 = Float32Array.from(w.firstKernel.data, (v) => f(v));
  const z = new Float32Array(hid);
  for (let o = 0; o < hid; o++) {
    let acc = 0;
    for (let cell = 0; cell < n; cell++) {
      acc = f(acc + f(xn[cell] * k32[cell * hid + o]));
    }
    z[o] = eluF32(f(acc + f(w.firstBias.data[o])));
  }

  let cur = z;
  for (const b of w.blocks) {
    const w1 = Float32Array.from(b.w1.data, (v) => f(v));
    const w2 = Float32Array.from(b.w2.data, (v) => f(v));
    const za = Float32Array.from(cur, eluF32);
    const t = new Float32Array(hid);
    for (let o = 0; o < hid; o++) {
      let acc = 0;
      for (let ci = 0; ci < hid; ci++) acc = f(acc + f(za[ci] * w1[ci * hid + o]));
      t[o] = eluF32(f(acc + f(b.b1.data[o])));
    }
    const next = new Float32Array(hid);
    for (let o = 0; o < hid; o++) {
      let acc = 0;
      for (let ci = 0; ci < hid; ci++) acc = f(acc + f(t[ci] * w2[ci * hid + o]));
      next[o] = f(cur[o] + f(acc + f(b.b2.data[o])));
    }
    cur = next;
  }

  const P = paramsPerPixel(c);
  const hw = Float32Array.from(w.headW.data, (v) => f(v));
  const zh = Float32Array.from(cur, eluF32);
  const raw = new Float32Array(P);
  for (let o = 0; o < P; o++) {
    let acc = 0;
    for (let ci = 0; ci < hid; ci++) acc = f(acc + f(zh[ci] * hw[ci * P + o]));
    raw[o] = f(acc + f(w.headB.data[o]));
  }
  return rawToParams(c, raw, true);
}
