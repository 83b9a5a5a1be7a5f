/**
 * Tensor export adapter.
 *
 * Takes per-frame probability tensors (one channel per candidate lane) as
 * produced by segmentation-style inference, applies the declared activation,
 * optionally drops a background channel, clamps to [0, 1], and emits raw
 * frames plus a manifest in the exact format the toolkit ingests. The
 * adapter never touches model code; it only converts serialized arrays.
 */

import * as fs from 'node:fs';
import * as path from 'node:path';

import { encodeRawFrame } from './rawf32.js';

export type Layout = 'CHW' | 'HWC';
export type Activation = 'none' | 'sigmoid' | 'softmax';

export interface TensorSpec {
  layout: Layout;
  activation: Activation;
  backgroundChannel?: number;
}

export interface FrameTensor {
  shape: number[];
  data: Float32Array;
}

export interface ExportedFrame {
  width: number;
  height: number;
  channels: number;
  data: Float32Array;
}

export function convertFrame(tensor: FrameTensor, spec: TensorSpec): ExportedFrame {
  if (tensor.shape.length !== 3) {
    throw new Error(`expected a rank-3 tensor, got shape [${tensor.shape.join(', ')}]`);
  }
  for (const v of tensor.data) {
    if (!Number.isFinite(v)) {
      throw new Error('tensor contains non-finite values');
    }
  }
  const chw = spec.layout === 'CHW' ? tensor : hwcToChw(tensor);
  const [channels, height, width] = chw.shape;
  let data: Float64Array = Float64Array.from(chw.data);
  if (spec.activation === 'sigmoid') {
    data = data.map((v) => 1 / (1 + Math.exp(-v)));
  } else if (spec.activation === 'softmax') {
    data = softmaxOverChannels(data, channels, height * width);
  }
  let outChannels = channels;
  if (spec.backgroundChannel !== undefined) {
    if (spec.backgroundChannel < 0 || spec.backgroundChannel >= channels) {
      throw new Error(
        `background channel ${spec.backgroundChannel} out of range for ${channels} channels`,
      );
    }
    const plane = height * width;
    const kept = new Float64Array((channels - 1) * plane);
    let k = 0;
    for (let c = 0; c < channels; c++) {
      if (c === spec.backgroundChannel) continue;
      kept.set(data.subarray(c * plane, (c + 1) * plane), k * plane);
      k += 1;
    }
    data = kept;
    outChannels = channels - 1;
  }
  const clamped = new Float32Array(data.length);
  for (let i = 0; i < data.length; i++) {
    clamped[i] = Math.min(1, Math.max(0, data[i]));
  }
  return { width, height, channels: outChannels, data: clamped };
}

function hwcToChw(tensor: FrameTensor): FrameTensor {
  const [height, width, channels] = tensor.shape;
  const out = new Float32Array(tensor.data.length);
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      for (let c = 0; c < channels; c++) {
        out[c * height * width + y * width + x] = tensor.data[(y * width + x) * channels + c];
      }
    }
  }
  return { shape: [channels, height, width], data: out };
}

function softmaxOverChannels(data: Float64Array, channels: number, plane: number): Float64Array {
  const out = new Float64Array(data.length);
  for (let p = 0; p < plane; p++) {
    let maxV = -Infinity;
    for (let c = 0; c < channels; c++) maxV = Math.max(maxV, data[c * plane + p]);
    let sum = 0;
    for (let c = 0; c < channels; c++) {
      const e = Math.exp(data[c * plane + p] - maxV);
      out[c * plane + p] = e;
      sum += e;
    }
    for (let c = 0; c < channels; c++) out[c * plane + p] /= sum;
  }
  return out;
}

export function exportFrames(
  tensors: Iterable<FrameTensor>,
  spec: TensorSpec,
  outDir: string,
): string {
  fs.mkdirSync(path.join(outDir, 'frames'), { recursive: true });
  const manifestLines: string[] = ['# exported probability maps'];
  let index = 0;
  let firstShape: string | undefined;
  for (const tensor of tensors) {
    const shapeKey = tensor.shape.join('x');
    if (firstShape === undefined) {
      firstShape = shapeKey;
    } else if (shapeKey !== firstShape) {
      throw new Error(
        `shape mismatch mid-stream: frame ${index} is ${shapeKey}, expected ${firstShape}`,
      );
    }
    const frame = convertFrame(tensor, spec);
    const rel = `frames/frame_${String(index).padStart(6, '0')}.raw`;
    fs.writeFileSync(
      path.join(outDir, rel),
      encodeRawFrame({
        width: frame.width,
        height: frame.height,
        channels: frame.channels,
        data: frame.data,
      }),
    );
    manifestLines.push(`${index} ${rel}`);
    index += 1;
  }
  if (index === 0) {
    throw new Error('no input tensors to export');
  }
  const manifestPath = path.join(outDir, 'manifest.txt');
  fs.writeFileSync(manifestPath, manifestLines.join('\n') + '\n');
  return manifestPath;
}
