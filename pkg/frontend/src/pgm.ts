/** Binary PGM (P5) read/write; the toy datasets are 8-bit grayscale. */

export interface Image {
  width: number;
  height: number;
  data: Uint8Array; // row-major
}

export function encodePgm(img: Image): Uint8Array {
  const header = new TextEncoder().encode(`P5\n${img.width} ${img.height}\n255\n`);
  const out = new Uint8Array(header.length + img.data.length);
  out.set(header);
  out.set(img.data, header.length);
  return out;
}

export function decodePgm(data: Uint8Array): Image {
  if (data[0] !== 0x50 || data[1] !== 0x35) throw new Error("not a P5 PGM");
  let pos = 2;
  const fields: number[] = [];
  while (fields.length < 3) {
    while (pos < data.length && isSpace(data[pos])) pos++;
    if (data[pos] === 0x23) { // comment
      while (pos < data.length && data[pos] !== 0x0a) pos++;
      continue;
    }
    let start = pos;
    while (pos < data.length && !isSpace(data[pos])) pos++;
    fields.push(parseInt(new TextDecoder().decode(data.subarray(start, pos)), 10));
  }
  pos++; // single separator byte
  const [width, height, maxval] = fields;
  if (!(maxval > 0 && maxval <= 255)) throw new Error(`unsupported maxval ${maxval}`);
  const need = width * height;
  if (data.length - pos < need) throw new Error("PGM raster truncated");
  return { width, height, data: data.slice(pos, pos + need) };
}

function isSpace(b: number): boolean {
  return b === 0x20 || b === 0x09 || b === 0x0a || b === 0x0d;
}
