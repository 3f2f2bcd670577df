import { describe, expect, it } from "vitest";

import { Rng } from "../src/rng.js";
import {
  Config, fnv1a64, initWeights, kernelWidth, loadWeights, maskAllows,
  namedTensors, saveWeights, zeroMaskedCells,
} from "../src/weights.js";

const cfg: Config = { h: 2, channels: 1, hidden: 4, resblocks: 1, mixtures: 2 };

describe("fnv1a64", () => {
  it("matches the published test vectors", () => {
    expect(fnv1a64(new Uint8Array(0))).toBe(0xcbf29ce484222325n);
    expect(fnv1a64(new TextEncoder().encode("a"))).toBe(0xaf63dc4c8601ec8cn);
    expect(fnv1a64(new TextEncoder().encode("foobar"))).toBe(0x85944171f73967e8n);
  });
});

describe("mask", () => {
  it("allows rows above and the left strip of the bottom row", () => {
    expect(maskAllows(cfg, 0, 4)).toBe(true);
    expect(maskAllows(cfg, 1, 0)).toBe(true);
    expect(maskAllows(cfg, 2, 1)).toBe(true);
    expect(maskAllows(cfg, 2, 2)).toBe(false); // the target cell itself
    expect(maskAllows(cfg, 2, 4)).toBe(false);
  });

  it("zeroes masked cells", () => {
    const w = initWeights(cfg, new Rng(7));
    const kw = kernelWidth(cfg);
    for (let col = cfg.h; col < kw; col++) {
      for (let i = 0; i < cfg.hidden; i++) {
        expect(w.firstKernel.data[(cfg.h * kw + col) * cfg.hidden + i]).toBe(0);
      }
    }
  });
});

describe("NLWT serialization", () => {
  it("round-trips config and tensors through bytes", () => {
    const w = initWeights(cfg, new Rng(1));
    const blob = saveWeights(cfg, w);
    const back = loadWeights(blob);
    expect(back.config).toEqual(cfg);
    const orig = namedTensors(w);
    const loaded = namedTensors(back.weights);
    expect(loaded.length).toBe(orig.length);
    for (let t = 0; t < orig.length; t++) {
      expect(loaded[t].name).toBe(orig[t].name);
      expect(loaded[t].dims).toEqual(orig[t].dims);
      for (let i = 0; i < orig[t].data.length; i++) {
        expect(loaded[t].data[i]).toBe(Math.fround(orig[t].data[i]));
      }
    }
    // a second save of the loaded weights is byte-identical
    expect(saveWeights(back.config, back.weights)).toEqual(blob);
  });

  it("rejects tampered bytes", () => {
    const blob = saveWeights(cfg, initWeights(cfg, new Rng(2)));
    const bad = blob.slice();
    bad[bad.length - 1] ^= 0xff;
    expect(() => loadWeights(bad)).toThrow(/hash/);
    expect(() => loadWeights(blob.subarray(0, 40))).toThrow();
  });

  it("exports masked cells as exact zeros even if perturbed", () => {
    const w = initWeights(cfg, new Rng(3));
    w.firstKernel.data[w.firstKernel.data.length - 1] = 0.5; // a masked cell
    const blob = saveWeights(cfg, w);
    const back = loadWeights(blob);
    const kw = kernelWidth(cfg);
    const k = back.weights.firstKernel.data;
    for (let col = cfg.h; col < kw; col++) {
      for (let i = 0; i < cfg.hidden; i++) {
        expect(k[(cfg.h * kw + col) * cfg.hidden + i]).toBe(0);
      }
    }
  });

  it("is deterministic per seed", () => {
    const a = saveWeights(cfg, initWeights(cfg, new Rng(11)));
    const b = saveWeights(cfg, initWeights(cfg, new Rng(11)));
    expect(a).toEqual(b);
  });
});
