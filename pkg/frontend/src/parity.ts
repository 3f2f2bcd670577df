/** Cross-implementation parity fixtures.
 *
 * Runs a set of probe context windows through the float32-exact forward and
 * records the resulting distribution parameters.  The codec's test suite
 * loads the exported weight file, evaluates the same windows, and must
 * match within 1e-5 (in practice bit-for-bit, up to libm rounding).
 */

import { Rng } from "./rng.js";
import { forwardF32, Params } from "./model.js";
import { Config, Weights, fnv1a64, kernelHeight, kernelWidth, maskAllows, saveWeights } from "./weights.js";

export interface Fixtures {
  config: { h: number; channels: number; hidden: number; resblocks: number; mixtures: number };
  model_hash: string;
  model_file?: string;
  /** probe windows, [kh][kw][C] byte values */
  patches: number[][][][];
  params: {
    logits: number[];
    means: number[][];
    log_scales: number[][];
    coeffs: number[][] | null;
  }[];
  /** index pairs that differ only in masked cells; params must be equal */
  masked_pairs: [number, number][];
}

function patchToNested(c: Config, flat: ArrayLike<number>): number[][][] {
  const kh = kernelHeight(c);
  const kw = kernelWidth(c);
  const out: number[][][] = [];
  let idx = 0;
  for (let r = 0; r < kh; r++) {
    const row: number[][] = [];
    for (let q = 0; q < kw; q++) {
      const cell: number[] = [];
      for (let ch = 0; ch < c.channels; ch++) cell.push(flat[idx++]);
      row.push(cell);
    }
    out.push(row);
  }
  return out;
}

function paramsToJson(p: Params) {
  return {
    logits: p.logits.slice(),
    means: p.means.map((r) => r.slice()),
    log_scales: p.logScales.map((r) => r.slice()),
    coeffs: p.coeffs ? p.coeffs.map((r) => r.slice()) : null,
  };
}

export function buildFixtures(c: Config, w: Weights, seed = 1234, randomProbes = 16): Fixtures {
  const kh = kernelHeight(c);
  const kw = kernelWidth(c);
  const n = kh * kw * c.channels;
  const rng = new Rng(seed);
  const probes: Float64Array[] = [];

  probes.push(new Float64Array(n)); // all zeros: the border context
  probes.push(new Float64Array(n).fill(255));
  probes.push(new Float64Array(n).fill(128));
  for (let p = 0; p < randomProbes; p++) {
    const probe = new Float64Array(n);
    for (let i = 0; i < n; i++) probe[i] = rng.int(256);
    probes.push(probe);
  }
  // a pair differing only in masked cells: identical parameters required
  const base = new Float64Array(n);
  for (let i = 0; i < n; i++) base[i] = rng.int(256);
  const twin = base.slice();
  for (let r = 0; r < kh; r++) {
    for (let q = 0; q < kw; q++) {
      if (!maskAllows(c, r, q)) {
        for (let ch = 0; ch < c.channels; ch++) {
          twin[(r * kw + q) * c.channels + ch] = 255 - base[(r * kw + q) * c.channels + ch];
        }
      }
    }
  }
  const pairStart = probes.length;
  probes.push(base, twin);

  const blob = saveWeights(c, w);
  return {
    config: {
      h: c.h, channels: c.channels, hidden: c.hidden,
      resblocks: c.resblocks, mixtures: c.mixtures,
    },
    model_hash: fnv1a64(blob.subarray(0, blob.length - 8)).toString(16).padStart(16, "0"),
    patches: probes.map((p) => patchToNested(c, p)),
    params: probes.map((p) => paramsToJson(forwardF32(c, w, p))),
    masked_pairs: [[pairStart, pairStart + 1]],
  };
}
