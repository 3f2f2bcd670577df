/** Model configuration, weight tensors, the first-layer mask, and the NLWT
 * binary weight format (little-endian, FNV-1a-64 trailer) the codec loads.
 */

export interface Config {
  h: number;
  channels: 1 | 3;
  hidden: number;
  resblocks: number;
  mixtures: number;
}

export function kernelHeight(c: Config): number {
  return c.h + 1;
}

export function kernelWidth(c: Config): number {
  return 2 * c.h + 1;
}

export function paramsPerPixel(c: Config): number {
  return c.mixtures * (c.channels === 1 ? 3 : 10);
}

/** One named tensor: float64 storage during training, float32 at export. */
export interface Tensor {
  name: string;
  dims: number[];
  data: Float64Array;
}

export function tensor(name: string, dims: number[]): Tensor {
  const size = dims.reduce((a, b) => a * b, 1);
  return { name, dims, data: new Float64Array(size) };
}

export interface Weights {
  firstKernel: Tensor; // (h+1, 2h+1, C, hidden)
  firstBias: Tensor;   // (hidden)
  blocks: { w1: Tensor; b1: Tensor; w2: Tensor; b2: Tensor }[];
  headW: Tensor;       // (hidden, P)
  headB: Tensor;       // (P)
}

export function namedTensors(w: Weights): Tensor[] {
  const out = [w.firstKernel, w.firstBias];
  for (const b of w.blocks) out.push(b.w1, b.b1, b.w2, b.b2);
  out.push(w.headW, w.headB);
  return out;
}

/** true = cell may be nonzero.  Rows above the target are fully usable; in
 * the bottom row only the h cells left of the target are. */
export function maskAllows(c: Config, r: number, col: number): boolean {
  return r < c.h ? true : col < c.h;
}

export function zeroMaskedCells(c: Config, w: Weights): void {
  const kh = kernelHeight(c);
  const kw = kernelWidth(c);
  const k = w.firstKernel.data;
  const per = c.channels * c.hidden;
  for (let r = 0; r < kh; r++) {
    for (let col = 0; col < kw; col++) {
      if (!maskAllows(c, r, col)) {
        k.fill(0, (r * kw + col) * per, (r * kw + col + 1) * per);
      }
    }
  }
}

export function initWeights(c: Config, rng: { gauss(): number }): Weights {
  const P = paramsPerPixel(c);
  const mk = (name: string, dims: number[], scale: number): Tensor => {
    const t = tensor(name, dims);
    for (let i = 0; i < t.data.length; i++) t.data[i] = rng.gauss() * scale;
    return t;
  };
  const w: Weights = {
    firstKernel: mk("first_kernel", [kernelHeight(c), kernelWidth(c), c.channels, c.hidden], 0.2),
    firstBias: mk("first_bias", [c.hidden], 0.05),
    blocks: Array.from({ length: c.resblocks }, (_, i) => ({
      w1: mk(`res${i}_w1`, [c.hidden, c.hidden], 0.2),
      b1: mk(`res${i}_b1`, [c.hidden], 0.05),
      w2: mk(`res${i}_w2`, [c.hidden, c.hidden], 0.2),
      b2: mk(`res${i}_b2`, [c.hidden], 0.05),
    })),
    headW: mk("head_w", [c.hidden, P], 0.1),
    headB: mk("head_b", [P], 0.01),
  };
  // start the log-scale biases wide so the initial code length sits near
  // the 8 bits/symbol of a spread-out distribution
  const K = c.mixtures;
  const C = c.channels;
  for (let i = K + C * K; i < K + 2 * C * K; i++) w.headB.data[i] = -0.6;
  zeroMaskedCells(c, w);
  return w;
}

const FNV_OFFSET = 0xcbf29ce484222325n;
const FNV_PRIME = 0x100000001b3n;
const MASK64 = 0xffffffffffffffffn;

export function fnv1a64(data: Uint8Array): bigint {
  let h = FNV_OFFSET;
  for (const b of data) {
    h ^= BigInt(b);
    h = (h * FNV_PRIME) & MASK64;
  }
  return h;
}

/** Serialize to NLWT bytes; float32 payloads, masked cells exactly zero. */
export function saveWeights(c: Config, w: Weights): Uint8Array {
  zeroMaskedCells(c, w);
  const chunks: Uint8Array[] = [];
  const head = new Uint8Array(12);
  const hv = new DataView(head.buffer);
  head.set([0x4e, 0x4c, 0x57, 0x54]); // "NLWT"
  hv.setUint8(4, 1); // version
  hv.setUint8(5, c.h);
  hv.setUint8(6, c.channels);
  hv.setUint16(7, c.hidden, true);
  hv.setUint8(9, c.resblocks);
  hv.setUint8(10, c.mixtures);
  hv.setUint8(11, 0); // sheared flag: trainer always exports unsheared
  chunks.push(head);
  for (const t of namedTensors(w)) {
    const name = new TextEncoder().encode(t.name);
    const block = new Uint8Array(2 + name.length + 1 + 4 * t.dims.length + 4 * t.data.length);
    const bv = new DataView(block.buffer);
    bv.setUint16(0, name.length, true);
    block.set(name, 2);
    let pos = 2 + name.length;
    bv.setUint8(pos, t.dims.length);
    pos += 1;
    for (const d of t.dims) {
      bv.setUint32(pos, d, true);
      pos += 4;
    }
    for (let i = 0; i < t.data.length; i++) {
      bv.setFloat32(pos + 4 * i, Math.fround(t.data[i]), true);
    }
    chunks.push(block);
  }
  const bodyLen = chunks.reduce((a, b) => a + b.length, 0);
  const out = new Uint8Array(bodyLen + 8);
  let pos = 0;
  for (const ch of chunks) {
    out.set(ch, pos);
    pos += ch.length;
  }
  const hash = fnv1a64(out.subarray(0, bodyLen));
  new DataView(out.buffer).setBigUint64(bodyLen, hash, true);
  return out;
}

/** Parse NLWT bytes (for round-trip tests and the parity tool). */
export function loadWeights(data: Uint8Array): { config: Config; weights: Weights; hash: bigint } {
  const dv = new DataView(data.buffer, data.byteOffset, data.byteLength);
  if (data.length < 20 || String.fromCharCode(...data.subarray(0, 4)) !== "NLWT") {
    throw new Error("not an NLWT weight file");
  }
  if (dv.getUint8(4) !== 1) throw new Error("unsupported weight version");
  const config: Config = {
    h: dv.getUint8(5),
    channels: dv.getUint8(6) as 1 | 3,
    hidden: dv.getUint16(7, true),
    resblocks: dv.getUint8(9),
    mixtures: dv.getUint8(10),
  };
  if (dv.getUint8(11) !== 0) throw new Error("trainer cannot consume sheared weights");
  const hash = dv.getBigUint64(data.length - 8, true);
  if (hash !== fnv1a64(data.subarray(0, data.length - 8))) {
    throw new Error("weight file hash mismatch");
  }
  let pos = 12;
  const readTensor = (): Tensor => {
    const nameLen = dv.getUint16(pos, true);
    pos += 2;
    const name = new TextDecoder().decode(data.subarray(pos, pos + nameLen));
    pos += nameLen;
    const rank = dv.getUint8(pos);
    pos += 1;
    const dims: number[] = [];
    for (let i = 0; i < rank; i++) {
      dims.push(dv.getUint32(pos, true));
      pos += 4;
    }
    const t = tensor(name, dims);
    for (let i = 0; i < t.data.length; i++) {
      t.data[i] = dv.getFloat32(pos + 4 * i, true);
    }
    pos += 4 * t.data.length;
    return t;
  };
  const firstKernel = readTensor();
  const firstBias = readTensor();
  const blocks = Array.from({ length: config.resblocks }, () => ({
    w1: readTensor(),
    b1: readTensor(),
    w2: readTensor(),
    b2: readTensor(),
  }));
  const headW = readTensor();
  const headB = readTensor();
  if (pos !== data.length - 8) throw new Error("trailing bytes in weight file");
  return { config, weights: { firstKernel, firstBias, blocks, headW, headB }, hash };
}
