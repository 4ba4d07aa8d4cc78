/**
 * Reader for chanest dataset directories and writer for prediction files.
 *
 * Byte-compatible with the Python implementation: 8-byte magic, uint32 LE
 * format version, uint32 LE record count, then float32 LE records. Dataset
 * records are input [nPilotSc, nPilotSym, 2], label [nSubcarriers,
 * nSymbols, 2], snr_db, doppler_hz; prediction records are label-shaped.
 * See docs/dataset_format.md in the repository root.
 */
import * as crypto from 'node:crypto';
import * as fs from 'node:fs';
import * as path from 'node:path';

export const DATASET_MAGIC = 'CHESTDS\0';
export const PREDICTIONS_MAGIC = 'CHESTPR\0';
export const FORMAT_VERSION = 1;

const HEADER_BYTES = 16;

export interface FrameInfo {
  n_subcarriers: number;
  n_symbols: number;
  subcarrier_spacing_hz: number;
  fft_size: number;
  cp_samples: number;
  impl_delay_samples: number;
  carrier_hz: number;
}

export interface PatternInfo {
  pilot_symbols: number[];
  comb_offset: number;
  comb_spacing: number;
  pilot_value: [number, number];
}

export interface FileEntry {
  name: string;
  split: 'train' | 'val';
  count: number;
  sha256: string;
}

export interface Manifest {
  format_version: number;
  frame: FrameInfo;
  pattern: PatternInfo;
  channel: { name?: string; delays_ns: number[]; gains_db: number[] };
  count: number;
  snr_range_db: [number, number];
  doppler_range_hz: [number, number];
  base_seed: number;
  val_fraction: number;
  files: FileEntry[];
}

export interface Sample {
  input: Float32Array; // [nPilotSc, nPilotSym, 2] row-major
  label: Float32Array; // [nSubcarriers, nSymbols, 2] row-major
  snrDb: number;
  dopplerHz: number;
}

export interface Shapes {
  input: [number, number, number];
  label: [number, number, number];
}

export class DatasetError extends Error {}

export function readManifest(dir: string): Manifest {
  const file = path.join(dir, 'manifest.json');
  if (!fs.existsSync(file)) {
    throw new DatasetError(`missing manifest: ${file}`);
  }
  const manifest = JSON.parse(fs.readFileSync(file, 'utf8')) as Manifest;
  if (manifest.format_version !== FORMAT_VERSION) {
    throw new DatasetError(`unsupported format version ${manifest.format_version}`);
  }
  return manifest;
}

/** Tensor shapes implied by a manifest's frame and pilot pattern. */
export function sampleShapes(manifest: Manifest): Shapes {
  const { n_subcarriers, n_symbols } = manifest.frame;
  const { comb_offset, comb_spacing, pilot_symbols } = manifest.pattern;
  let nPilotSc = 0;
  for (let k = comb_offset; k < n_subcarriers; k += comb_spacing) {
    nPilotSc += 1;
  }
  return {
    input: [nPilotSc, pilot_symbols.length, 2],
    label: [n_subcarriers, n_symbols, 2],
  };
}

function elementCount(shape: number[]): number {
  return shape.reduce((a, b) => a * b, 1);
}

function sha256Hex(buf: Buffer): string {
  return crypto.createHash('sha256').update(buf).digest('hex');
}

/** Copy into a fresh, 4-aligned ArrayBuffer so Float32Array views are legal. */
function alignedBytes(buf: Buffer): ArrayBuffer {
  const out = new ArrayBuffer(buf.byteLength);
  new Uint8Array(out).set(buf);
  return out;
}

function checkHeader(buf: Buffer, magic: string, file: string): number {
  if (buf.length < HEADER_BYTES) {
    throw new DatasetError(`truncated header in ${file}`);
  }
  if (buf.toString('latin1', 0, 8) !== magic) {
    throw new DatasetError(`bad magic in ${file}`);
  }
  const version = buf.readUInt32LE(8);
  if (version !== FORMAT_VERSION) {
    throw new DatasetError(`unsupported format version ${version} in ${file}`);
  }
  return buf.readUInt32LE(12);
}

/** Parse one sample file; shapes come from the manifest. */
export function readSampleFile(file: string, shapes: Shapes): Sample[] {
  const buf = fs.readFileSync(file);
  const count = checkHeader(buf, DATASET_MAGIC, file);
  const nIn = elementCount(shapes.input);
  const nLabel = elementCount(shapes.label);
  const recordBytes = 4 * (nIn + nLabel + 2);
  if (buf.length !== HEADER_BYTES + count * recordBytes) {
    throw new DatasetError(`truncated or oversized sample file ${file}`);
  }
  const bytes = alignedBytes(buf);
  const samples: Sample[] = [];
  for (let i = 0; i < count; i++) {
    const base = HEADER_BYTES + i * recordBytes;
    const scalars = new Float32Array(bytes, base + 4 * (nIn + nLabel), 2);
    samples.push({
      input: new Float32Array(bytes, base, nIn),
      label: new Float32Array(bytes, base + 4 * nIn, nLabel),
      snrDb: scalars[0],
      dopplerHz: scalars[1],
    });
  }
  return samples;
}

export interface Dataset {
  manifest: Manifest;
  shapes: Shapes;
  samples: Sample[]; // manifest file order: train then val
}

/**
 * Read a dataset directory, verifying each file's sha256 against the
 * manifest. `split` restricts to one split; default is everything in
 * manifest order, which is the order prediction files must follow.
 */
export function readDataset(dir: string, split?: 'train' | 'val'): Dataset {
  const manifest = readManifest(dir);
  const shapes = sampleShapes(manifest);
  const samples: Sample[] = [];
  for (const entry of manifest.files) {
    if (split && entry.split !== split) {
      continue;
    }
    const file = path.join(dir, entry.name);
    if (!fs.existsSync(file)) {
      throw new DatasetError(`missing dataset file ${entry.name}`);
    }
    if (sha256Hex(fs.readFileSync(file)) !== entry.sha256) {
      throw new DatasetError(`digest mismatch for ${entry.name}`);
    }
    const part = readSampleFile(file, shapes);
    if (part.length !== entry.count) {
      throw new DatasetError(`count mismatch for ${entry.name}`);
    }
    samples.push(...part);
  }
  return { manifest, shapes, samples };
}

/**
 * Write a predictions file: one label-shaped float32 tensor per sample, in
 * dataset order. Refuses to finish if the count disagrees; the .partial
 * file is removed on failure.
 */
export function writePredictions(
  file: string,
  predictions: Iterable<Float32Array>,
  count: number,
): void {
  const partial = `${file}.partial`;
  fs.mkdirSync(path.dirname(file), { recursive: true });
  const fd = fs.openSync(partial, 'w');
  let written = 0;
  try {
    const header = Buffer.alloc(HEADER_BYTES);
    header.write(PREDICTIONS_MAGIC, 0, 'latin1');
    header.writeUInt32LE(FORMAT_VERSION, 8);
    header.writeUInt32LE(count, 12);
    fs.writeSync(fd, header);
    for (const tensor of predictions) {
      fs.writeSync(fd, Buffer.from(tensor.buffer, tensor.byteOffset, tensor.byteLength));
      written += 1;
    }
    if (written !== count) {
      throw new DatasetError(`expected ${count} predictions, got ${written}`);
    }
  } catch (err) {
    fs.closeSync(fd);
    fs.rmSync(partial, { force: true });
    throw err;
  }
  fs.closeSync(fd);
  fs.renameSync(partial, file);
}

export function readPredictions(file: string, labelShape: number[]): Float32Array[] {
  const buf = fs.readFileSync(file);
  const count = checkHeader(buf, PREDICTIONS_MAGIC, file);
  const n = elementCount(labelShape);
  if (buf.length !== HEADER_BYTES + count * 4 * n) {
    throw new DatasetError(`truncated or oversized predictions file ${file}`);
  }
  const bytes = alignedBytes(buf);
  const out: Float32Array[] = [];
  for (let i = 0; i < count; i++) {
    out.push(new Float32Array(bytes, HEADER_BYTES + i * 4 * n, n));
  }
  return out;
}
