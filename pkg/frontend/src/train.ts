/** Maximum-likelihood training of the masked local network with Adam.
 *
 * Each step samples pixel positions across the training images, gathers
 * their zero-padded context windows, and minimizes the mean negative
 * log-likelihood of the true bytes.  Masked first-layer cells are pinned to
 * zero: their gradients are discarded and the weights re-zeroed after every
 * update, so locality can never leak.
 */

import { Image } from "./pgm.js";
import { Rng } from "./rng.js";
import { Grads, backward, forward, zeroGrads } from "./model.js";
import { nllBits, pixelLoss } from "./dmol.js";
import {
  Config, Weights, initWeights, kernelHeight, kernelWidth, maskAllows,
  namedTensors, zeroMaskedCells,
} from "./weights.js";

export interface TrainOptions {
  config: Config;
  lr: number;
  batch: number;
  steps: number;
  seed: number;
  /** final lr = lr * lrDecay (exponential schedule); means live on a
   * 127.5x-amplified byte scale, so without decay Adam's constant step
   * size leaves them oscillating by several byte values. */
  lrDecay?: number;
  logEvery?: number;
  log?: (msg: string) => void;
}

/** Zero-padded context window for 1-indexed pixel (i, j); masked cells keep
 * whatever the image holds (the mask makes them irrelevant). */
export function gatherPatch(c: Config, img: Image, i: number, j: number): Float64Array {
  const kh = kernelHeight(c);
  const kw = kernelWidth(c);
  const out = new Float64Array(kh * kw);
  for (let r = 0; r < kh; r++) {
    const ir = i - 1 - c.h + r;
    if (ir < 0 || ir >= img.height) continue;
    for (let q = 0; q < kw; q++) {
      const jc = j - 1 - c.h + q;
      if (jc < 0 || jc >= img.width) continue;
      out[r * kw + q] = img.data[ir * img.width + jc];
    }
  }
  return out;
}

function adamStep(
  params: Float64Array, grad: Float64Array, m: Float64Array, v: Float64Array,
  lr: number, t: number,
): void {
  const b1 = 0.9;
  const b2 = 0.999;
  const eps = 1e-8;
  const c1 = 1 - Math.pow(b1, t);
  const c2 = 1 - Math.pow(b2, t);
  for (let i = 0; i < params.length; i++) {
    m[i] = b1 * m[i] + (1 - b1) * grad[i];
    v[i] = b2 * v[i] + (1 - b2) * grad[i] * grad[i];
    params[i] -= (lr * (m[i] / c1)) / (Math.sqrt(v[i] / c2) + eps);
  }
}

function gradTensors(c: Config, g: Grads): Float64Array[] {
  const out = [g.firstKernel, g.firstBias];
  for (const b of g.blocks) out.push(b.w1, b.b1, b.w2, b.b2);
  out.push(g.headW, g.headB);
  return out;
}

function zeroMaskedGrads(c: Config, g: Grads): void {
  const kh = kernelHeight(c);
  const kw = kernelWidth(c);
  const per = g.firstKernel.length / (kh * kw);
  for (let r = 0; r < kh; r++) {
    for (let col = 0; col < kw; col++) {
      if (!maskAllows(c, r, col)) {
        g.firstKernel.fill(0, (r * kw + col) * per, (r * kw + col + 1) * per);
      }
    }
  }
}

export function evalBpd(c: Config, w: Weights, images: Image[]): number {
  let bits = 0;
  let count = 0;
  for (const img of images) {
    for (let i = 1; i <= img.height; i++) {
      for (let j = 1; j <= img.width; j++) {
        const patch = gatherPatch(c, img, i, j);
        const trace = forward(c, w, patch);
        bits += nllBits(c, trace.raw, [img.data[(i - 1) * img.width + (j - 1)]]);
        count += 1;
      }
    }
  }
  return bits / count;
}

export function train(opts: TrainOptions, images: Image[]): Weights {
  const c = opts.config;
  if (c.channels !== 1) throw new Error("the toy trainer handles grayscale data");
  if (images.length === 0) throw new Error("empty dataset");
  const rng = new Rng(opts.seed);
  const w = initWeights(c, rng);
  const mState = gradTensors(c, zeroGrads(c, w));
  const vState = gradTensors(c, zeroGrads(c, w));
  const weightTensors = namedTensors(w).map((t) => t.data);
  const log = opts.log ?? (() => undefined);

  for (let step = 1; step <= opts.steps; step++) {
    const grads = zeroGrads(c, w);
    let loss = 0;
    for (let b = 0; b < opts.batch; b++) {
      const img = images[rng.int(images.length)];
      const i = 1 + rng.int(img.height);
      const j = 1 + rng.int(img.width);
      const patch = gatherPatch(c, img, i, j);
      const trace = forward(c, w, patch);
      const target = [img.data[(i - 1) * img.width + (j - 1)]];
      const pl = pixelLoss(c, trace.raw, target, true);
      loss += pl.nllNats;
      backward(c, w, trace, pl.dRaw, grads);
    }
    if (!Number.isFinite(loss)) {
      throw new Error(`training diverged at step ${step} (loss ${loss})`);
    }
    zeroMaskedGrads(c, grads);
    // constant lr while parameters travel, then exponential decay so the
    // byte-scaled means can settle below Adam's step-size floor
    const decay = opts.lrDecay ?? 0.003;
    const ramp = Math.floor(opts.steps * 0.4);
    const effLr = step <= ramp || opts.steps <= ramp + 1
      ? opts.lr
      : opts.lr * Math.pow(decay, (step - ramp) / (opts.steps - ramp));
    const gs = gradTensors(c, grads);
    const headB = gs.length - 1;
    const K = c.mixtures;
    const lsLo = K + c.channels * K;
    const lsHi = K + 2 * c.channels * K;
    for (let t = 0; t < gs.length; t++) {
      for (let i = 0; i < gs[t].length; i++) gs[t][i] /= opts.batch;
      if (t === headB) {
        // the log-scale biases travel furthest (wide init to near-delta);
        // run that slice as its own param group at 3x the rate
        const sub = (a: Float64Array, lo: number, hi: number) => a.subarray(lo, hi);
        adamStep(sub(weightTensors[t], 0, lsLo), sub(gs[t], 0, lsLo),
                 sub(mState[t], 0, lsLo), sub(vState[t], 0, lsLo), effLr, step);
        adamStep(sub(weightTensors[t], lsLo, lsHi), sub(gs[t], lsLo, lsHi),
                 sub(mState[t], lsLo, lsHi), sub(vState[t], lsLo, lsHi),
                 3 * effLr, step);
        adamStep(sub(weightTensors[t], lsHi, gs[t].length),
                 sub(gs[t], lsHi, gs[t].length),
                 sub(mState[t], lsHi, gs[t].length),
                 sub(vState[t], lsHi, gs[t].length), effLr, step);
      } else {
        adamStep(weightTensors[t], gs[t], mState[t], vState[t], effLr, step);
      }
    }
    zeroMaskedCells(c, w);
    if (opts.logEvery && (step === 1 || step % opts.logEvery === 0)) {
      log(`step ${step}: batch nll ${(loss / opts.batch / Math.LN2).toFixed(3)} bits`);
    }
  }
  return w;
}
