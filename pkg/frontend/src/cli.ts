/**
 * Command line entry point.
 *
 *   export --layout CHW --activation sigmoid --drop-bg 0 --in <dir> --out <dir>
 *
 * Reads every .npy file in the input directory (sorted by name, which is the
 * temporal order) and writes raw frames plus a manifest to the output
 * directory. Exit codes: 0 success, 1 usage error, 2 data error.
 */

import * as fs from 'node:fs';
import * as path from 'node:path';

import { Activation, exportFrames, FrameTensor, Layout, TensorSpec } from './adapter.js';
import { parseNpy } from './npy.js';

interface Args {
  layout: Layout;
  activation: Activation;
  dropBg?: number;
  inDir: string;
  outDir: string;
}

function parseArgs(argv: string[]): Args {
  if (argv[0] !== 'export') {
    throw new UsageError(`unknown command ${argv[0] ?? '(none)'}; expected 'export'`);
  }
  const opts = new Map<string, string>();
  for (let i = 1; i < argv.length; i += 2) {
    const key = argv[i];
    const value = argv[i + 1];
    if (!key.startsWith('--') || value === undefined) {
      throw new UsageError(`bad option pair near ${key}`);
    }
    opts.set(key.slice(2), value);
  }
  const layout = (opts.get('layout') ?? 'CHW').toUpperCase();
  if (layout !== 'CHW' && layout !== 'HWC') {
    throw new UsageError(`--layout must be CHW or HWC, got ${layout}`);
  }
  const activation = (opts.get('activation') ?? 'none').toLowerCase();
  if (activation !== 'none' && activation !== 'sigmoid' && activation !== 'softmax') {
    throw new UsageError(`--activation must be none, sigmoid, or softmax, got ${activation}`);
  }
  const inDir = opts.get('in');
  const outDir = opts.get('out');
  if (!inDir || !outDir) {
    throw new UsageError('--in and --out are required');
  }
  const dropRaw = opts.get('drop-bg');
  const dropBg = dropRaw === undefined ? undefined : Number.parseInt(dropRaw, 10);
  if (dropBg !== undefined && !Number.isInteger(dropBg)) {
    throw new UsageError(`--drop-bg must be an integer, got ${dropRaw}`);
  }
  return { layout: layout as Layout, activation: activation as Activation, dropBg, inDir, outDir };
}

class UsageError extends Error {}

function* readTensors(dir: string): Generator<FrameTensor> {
  const names = fs
    .readdirSync(dir)
    .filter((n) => n.endsWith('.npy'))
    .sort();
  if (names.length === 0) {
    throw new Error(`no .npy files in ${dir}`);
  }
  for (const name of names) {
    const arr = parseNpy(fs.readFileSync(path.join(dir, name)));
    yield { shape: arr.shape, data: arr.data };
  }
}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    if (err instanceof UsageError) {
      console.error(`export: ${err.message}`);
      console.error(
        'usage: export --layout CHW|HWC --activation none|sigmoid|softmax' +
          ' [--drop-bg N] --in <dir> --out <dir>',
      );
      return 1;
    }
    throw err;
  }
  const spec: TensorSpec = {
    layout: args.layout,
    activation: args.activation,
    backgroundChannel: args.dropBg,
  };
  try {
    const manifest = exportFrames(readTensors(args.inDir), spec, args.outDir);
    console.log(`wrote ${manifest}`);
    return 0;
  } catch (err) {
    console.error(`export: ${(err as Error).message}`);
    return 2;
  }
}

if (process.argv[1] && path.basename(process.argv[1]).startsWith('cli.')) {
  process.exit(main(process.argv.slice(2)));
}
