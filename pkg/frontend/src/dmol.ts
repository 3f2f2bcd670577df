/** Discretized mixture-of-logistics likelihood and its gradients.
 *
 * Matches the codec's semantics exactly: per channel, bin x gets
 * sigma((x+0.5-mu)/s) - sigma((x-0.5-mu)/s) with bins 0 and 255 absorbing
 * the tails; mixture weights are shared across channels; G and B means are
 * shifted linearly by the earlier channels' values scaled to [-1, 1].
 * Means and scales live in byte units via the frozen head mapping.
 */

import { Config } from "./weights.js";
import { COEFF_SCALE, MEAN_BIAS, MEAN_SCALE, LOG_SCALE_OFFSET, MIN_RAW_LOG_SCALE } from "./model.js";

const LN2 = Math.LN2;

function sigmoid(z: number): number {
  return z >= 0 ? 1 / (1 + Math.exp(-z)) : Math.exp(z) / (1 + Math.exp(z));
}

function softmax(logits: ArrayLike<number>, out: Float64Array): void {
  let m = -Infinity;
  for (let i = 0; i < logits.length; i++) m = Math.max(m, logits[i]);
  let sum = 0;
  for (let i = 0; i < logits.length; i++) {
    out[i] = Math.exp(logits[i] - m);
    sum += out[i];
  }
  for (let i = 0; i < logits.length; i++) out[i] /= sum;
}

export interface PixelLoss {
  nllNats: number;
  /** d(nllNats)/d(raw head outputs); same layout as the head. */
  dRaw: Float64Array;
}

/** Negative log-likelihood of one pixel's bytes under the head outputs.
 * `raw` is the head's output vector; `xs` the pixel's byte per channel. */
export function pixelLoss(c: Config, raw: Float64Array, xs: number[], wantGrad: boolean): PixelLoss {
  const K = c.mixtures;
  const C = c.channels;
  const weights = new Float64Array(K);
  softmax(raw.subarray(0, K), weights); // logits are raw[0..K)
  const dRaw = new Float64Array(raw.length);
  let nll = 0;
  // accumulated d(nll)/d(weight_k) across channels, folded into logits last
  const dW = new Float64Array(K);

  for (let ch = 0; ch < C; ch++) {
    const x = xs[ch];
    const Pk = new Float64Array(K);
    const dPdMu = new Float64Array(K);
    const dPdLs = new Float64Array(K);
    const mus = new Float64Array(K);
    for (let k = 0; k < K; k++) {
      const mRaw = raw[K + ch * K + k];
      let mu = MEAN_SCALE * mRaw + MEAN_BIAS;
      if (C === 3 && ch > 0) {
        if (ch === 1) {
          mu += COEFF_SCALE * Math.tanh(raw[K + 6 * K + 0 * K + k]) * (xs[0] / 127.5 - 1);
        } else {
          mu += COEFF_SCALE * Math.tanh(raw[K + 6 * K + 1 * K + k]) * (xs[0] / 127.5 - 1)
              + COEFF_SCALE * Math.tanh(raw[K + 6 * K + 2 * K + k]) * (xs[1] / 127.5 - 1);
        }
      }
      mus[k] = mu;
      const sRaw = raw[K + C * K + ch * K + k];
      const ls = Math.max(sRaw, MIN_RAW_LOG_SCALE) + LOG_SCALE_OFFSET;
      const invS = Math.exp(-ls);
      const zPlus = (x + 0.5 - mu) * invS;
      const zMinus = (x - 0.5 - mu) * invS;
      const sigPlus = x === 255 ? 1 : sigmoid(zPlus);
      const sigMinus = x === 0 ? 0 : sigmoid(zMinus);
      Pk[k] = sigPlus - sigMinus;
      if (wantGrad) {
        const dPlus = x === 255 ? 0 : sigPlus * (1 - sigPlus);
        const dMinus = x === 0 ? 0 : sigMinus * (1 - sigMinus);
        dPdMu[k] = (-dPlus + dMinus) * invS;
        dPdLs[k] = dPlus * -zPlus - dMinus * -zMinus;
      }
    }
    let p = 0;
    for (let k = 0; k < K; k++) p += weights[k] * Pk[k];
    p = Math.max(p, 1e-12);
    nll -= Math.log(p);
    if (!wantGrad) continue;
    for (let k = 0; k < K; k++) {
      dW[k] -= Pk[k] / p;
      const gMu = -(weights[k] * dPdMu[k]) / p;
      const gLs = -(weights[k] * dPdLs[k]) / p;
      dRaw[K + ch * K + k] += gMu * MEAN_SCALE;
      const sRaw = raw[K + C * K + ch * K + k];
      if (sRaw > MIN_RAW_LOG_SCALE) dRaw[K + C * K + ch * K + k] += gLs;
      if (C === 3 && ch > 0) {
        const scaled0 = xs[0] / 127.5 - 1;
        if (ch === 1) {
          const cr = raw[K + 6 * K + k];
          const th = Math.tanh(cr);
          dRaw[K + 6 * K + k] += gMu * COEFF_SCALE * (1 - th * th) * scaled0;
        } else {
          const scaled1 = xs[1] / 127.5 - 1;
          const cr1 = raw[K + 6 * K + K + k];
          const cr2 = raw[K + 6 * K + 2 * K + k];
          const th1 = Math.tanh(cr1);
          const th2 = Math.tanh(cr2);
          dRaw[K + 6 * K + K + k] += gMu * COEFF_SCALE * (1 - th1 * th1) * scaled0;
          dRaw[K + 6 * K + 2 * K + k] += gMu * COEFF_SCALE * (1 - th2 * th2) * scaled1;
        }
      }
    }
  }
  if (wantGrad) {
    // fold d(nll)/dw through the softmax: dl_k = w_k * (dW_k - sum_j w_j dW_j)
    let mean = 0;
    for (let k = 0; k < K; k++) mean += weights[k] * dW[k];
    for (let k = 0; k < K; k++) dRaw[k] = weights[k] * (dW[k] - mean);
  }
  return { nllNats: nll, dRaw };
}

export function nllBits(c: Config, raw: Float64Array, xs: number[]): number {
  return pixelLoss(c, raw, xs, false).nllNats / LN2;
}
