/** Toy dataset generation and loading.
 *
 * Images are small grayscale PGMs with strong local structure -- constant
 * fields and linear ramps -- which a horizon-limited model can learn to
 * near-determinism.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { Image, decodePgm, encodePgm } from "./pgm.js";
import { Rng } from "./rng.js";

export function toyImage(rng: Rng, size: number): Image {
  const data = new Uint8Array(size * size);
  const kind = rng.next();
  if (kind < 0.7) {
    data.fill(rng.int(256));
  } else {
    const v0 = rng.int(256);
    const v1 = rng.int(256);
    const horizontal = rng.next() < 0.5;
    for (let r = 0; r < size; r++) {
      for (let c = 0; c < size; c++) {
        const t = horizontal ? c / Math.max(1, size - 1) : r / Math.max(1, size - 1);
        data[r * size + c] = Math.round(v0 + (v1 - v0) * t);
      }
    }
  }
  return { width: size, height: size, data };
}

export function generateDataset(dir: string, count: number, size: number, seed: number): void {
  fs.mkdirSync(dir, { recursive: true });
  const rng = new Rng(seed);
  const digits = String(count - 1).length;
  for (let i = 0; i < count; i++) {
    const img = toyImage(rng, size);
    const name = `toy_${String(i).padStart(digits, "0")}.pgm`;
    fs.writeFileSync(path.join(dir, name), encodePgm(img));
  }
}

export function loadDataset(dir: string): Image[] {
  const files = fs.readdirSync(dir).filter((f) => f.endsWith(".pgm")).sort();
  if (files.length === 0) throw new Error(`no PGM files in ${dir}`);
  return files.map((f) => decodePgm(new Uint8Array(fs.readFileSync(path.join(dir, f)))));
}

/** Deterministic split: every tenth image is held out for evaluation. */
export function splitDataset(images: Image[]): { train: Image[]; heldout: Image[] } {
  const train: Image[] = [];
  const heldout: Image[] = [];
  images.forEach((img, i) => (i % 10 === 9 ? heldout : train).push(img));
  return { train, heldout };
}
