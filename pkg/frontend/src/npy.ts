/**
 * Minimal .npy (NumPy array file) reader and writer.
 *
 * Supports C-ordered little-endian float32/float64 arrays, which covers the
 * tensors that lane-detection inference dumps emit. Writing always produces
 * version 1.0 float32 files.
 */

const MAGIC = Buffer.from('\x93NUMPY', 'latin1');

export interface NpyArray {
  shape: number[];
  data: Float32Array;
}

export function parseNpy(buf: Buffer): NpyArray {
  if (buf.length < 10 || !buf.subarray(0, 6).equals(MAGIC)) {
    throw new Error('not an npy file (bad magic)');
  }
  const major = buf[6];
  let headerLen: number;
  let offset: number;
  if (major === 1) {
    headerLen = buf.readUInt16LE(8);
    offset = 10;
  } else if (major === 2 || major === 3) {
    headerLen = buf.readUInt32LE(8);
    offset = 12;
  } else {
    throw new Error(`unsupported npy version ${major}`);
  }
  const header = buf.subarray(offset, offset + headerLen).toString('latin1');
  const descr = matchField(header, /'descr'\s*:\s*'([^']+)'/, 'descr');
  const fortran = matchField(header, /'fortran_order'\s*:\s*(True|False)/, 'fortran_order');
  const shapeText = matchField(header, /'shape'\s*:\s*\(([^)]*)\)/, 'shape');
  if (fortran !== 'False') {
    throw new Error('fortran-ordered npy arrays are not supported');
  }
  const shape = shapeText
    .split(',')
    .map((t) => t.trim())
    .filter((t) => t.length > 0)
    .map((t) => Number.parseInt(t, 10));
  const count = shape.reduce((a, b) => a * b, 1);
  const payload = buf.subarray(offset + headerLen);
  let data: Float32Array;
  if (descr === '<f4') {
    if (payload.length < count * 4) throw new Error('npy payload truncated');
    data = new Float32Array(count);
    for (let i = 0; i < count; i++) data[i] = payload.readFloatLE(i * 4);
  } else if (descr === '<f8') {
    if (payload.length < count * 8) throw new Error('npy payload truncated');
    data = new Float32Array(count);
    for (let i = 0; i < count; i++) data[i] = payload.readDoubleLE(i * 8);
  } else {
    throw new Error(`unsupported npy dtype ${descr} (need <f4 or <f8)`);
  }
  return { shape, data };
}

export function writeNpy(shape: number[], data: Float32Array): Buffer {
  const dict = `{'descr': '<f4', 'fortran_order': False, 'shape': (${shape.join(', ')}${
    shape.length === 1 ? ',' : ''
  }), }`;
  let header = dict;
  const unpadded = 10 + header.length + 1;
  const pad = (64 - (unpadded % 64)) % 64;
  header = header + ' '.repeat(pad) + '\n';
  const head = Buffer.alloc(10 + header.length);
  MAGIC.copy(head, 0);
  head[6] = 1;
  head[7] = 0;
  head.writeUInt16LE(header.length, 8);
  head.write(header, 10, 'latin1');
  const payload = Buffer.alloc(data.length * 4);
  for (let i = 0; i < data.length; i++) payload.writeFloatLE(data[i], i * 4);
  return Buffer.concat([head, payload]);
}

function matchField(header: string, re: RegExp, name: string): string {
  const m = header.match(re);
  if (!m) throw new Error(`npy header missing ${name}`);
  return m[1];
}
