/** Trainer command line: gen-data, train, init, parity. */

import * as fs from "node:fs";
import * as path from "node:path";

import { generateDataset, loadDataset, splitDataset } from "./data.js";
import { buildFixtures } from "./parity.js";
import { evalBpd, train } from "./train.js";
import { Rng } from "./rng.js";
import { Config, initWeights, loadWeights, saveWeights } from "./weights.js";

function parseFlags(argv: string[]): Map<string, string> {
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    if (!key.startsWith("--") || i + 1 >= argv.length) {
      throw new Error(`malformed arguments near ${key}`);
    }
    flags.set(key.slice(2), argv[i + 1]);
  }
  return flags;
}

function num(flags: Map<string, string>, key: string, fallback: number): number {
  const v = flags.get(key);
  return v === undefined ? fallback : Number(v);
}

function need(flags: Map<string, string>, key: string): string {
  const v = flags.get(key);
  if (v === undefined) throw new Error(`missing required flag --${key}`);
  return v;
}

function configFromFlags(flags: Map<string, string>): Config {
  return {
    h: num(flags, "h", 2),
    channels: num(flags, "channels", 1) as 1 | 3,
    hidden: num(flags, "hidden", 8),
    resblocks: num(flags, "resblocks", 1),
    mixtures: num(flags, "mixtures", 2),
  };
}

function cmdGenData(flags: Map<string, string>): void {
  const dir = need(flags, "out");
  const count = num(flags, "count", 500);
  const size = num(flags, "size", 12);
  const seed = num(flags, "seed", 1);
  generateDataset(dir, count, size, seed);
  console.log(`wrote ${count} ${size}x${size} PGM images to ${dir}`);
}

function cmdTrain(flags: Map<string, string>): void {
  const config = configFromFlags(flags);
  const dataDir = need(flags, "data");
  const outPath = need(flags, "out");
  const steps = num(flags, "steps", 1500);
  const seed = num(flags, "seed", 0);
  const lr = num(flags, "lr", 0.01);
  const batch = num(flags, "batch", 32);

  const { train: trainSet, heldout } = splitDataset(loadDataset(dataDir));
  console.log(`dataset: ${trainSet.length} train / ${heldout.length} held-out images`);

  const t0 = Date.now();
  const weights = train(
    { config, lr, batch, steps, seed, logEvery: Math.max(1, Math.floor(steps / 10)), log: console.log },
    trainSet,
  );
  const bpd = evalBpd(config, weights, heldout);
  console.log(`held-out BPD ${bpd.toFixed(3)} after ${steps} steps `
    + `(${((Date.now() - t0) / 1000).toFixed(1)}s)`);
  fs.mkdirSync(path.dirname(path.resolve(outPath)), { recursive: true });
  fs.writeFileSync(outPath, saveWeights(config, weights));
  console.log(`wrote ${outPath}`);
}

function cmdInit(flags: Map<string, string>): void {
  const config = configFromFlags(flags);
  const outPath = need(flags, "out");
  const seed = num(flags, "seed", 0);
  const weights = initWeights(config, new Rng(seed));
  fs.writeFileSync(outPath, saveWeights(config, weights));
  console.log(`wrote untrained ${outPath}`);
}

function cmdParity(flags: Map<string, string>): void {
  const modelPath = need(flags, "model");
  const outPath = need(flags, "out");
  const seed = num(flags, "seed", 1234);
  const { config, weights } = loadWeights(new Uint8Array(fs.readFileSync(modelPath)));
  const fixtures = buildFixtures(config, weights, seed);
  fixtures.model_file = path.basename(modelPath);
  fs.writeFileSync(outPath, JSON.stringify(fixtures, null, 1));
  console.log(`wrote ${fixtures.patches.length} probe fixtures to ${outPath}`);
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  try {
    const flags = parseFlags(rest);
    switch (command) {
      case "gen-data": cmdGenData(flags); break;
      case "train": cmdTrain(flags); break;
      case "init": cmdInit(flags); break;
      case "parity": cmdParity(flags); break;
      default:
        console.error("usage: cli <gen-data|train|init|parity> [--flag value ...]");
        return 2;
    }
    return 0;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
}

process.exitCode = main(process.argv.slice(2));
