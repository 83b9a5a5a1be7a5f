/**
 * Raw probability-map frame format shared with the toolkit:
 * 16-byte header (magic "RNLD", u32 width, u32 height, u32 channels,
 * little-endian) followed by channel-planar row-major float32 values.
 */

const MAGIC = Buffer.from('RNLD', 'latin1');

export interface RawFrame {
  width: number;
  height: number;
  channels: number;
  data: Float32Array; // length = channels * height * width
}

export function encodeRawFrame(frame: RawFrame): Buffer {
  const { width, height, channels, data } = frame;
  if (data.length !== width * height * channels) {
    throw new Error('raw frame payload size does not match its dimensions');
  }
  const buf = Buffer.alloc(16 + data.length * 4);
  MAGIC.copy(buf, 0);
  buf.writeUInt32LE(width, 4);
  buf.writeUInt32LE(height, 8);
  buf.writeUInt32LE(channels, 12);
  for (let i = 0; i < data.length; i++) {
    buf.writeFloatLE(data[i], 16 + i * 4);
  }
  return buf;
}

export function decodeRawFrame(buf: Buffer): RawFrame {
  if (buf.length < 16 || !buf.subarray(0, 4).equals(MAGIC)) {
    throw new Error('not a raw frame (bad magic)');
  }
  const width = buf.readUInt32LE(4);
  const height = buf.readUInt32LE(8);
  const channels = buf.readUInt32LE(12);
  const count = width * height * channels;
  if (buf.length !== 16 + count * 4) {
    throw new Error('raw frame payload size mismatch');
  }
  const data = new Float32Array(count);
  for (let i = 0; i < count; i++) data[i] = buf.readFloatLE(16 + i * 4);
  return { width, height, channels, data };
}
