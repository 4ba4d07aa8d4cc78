/**
 * Model checkpoint save/load using plain file reads and writes.
 *
 * The node-specific file:// IO handlers live in the native binding package,
 * which is not a dependency here, so checkpoints go through the in-memory
 * IO handlers instead: model.json plus a raw weights.bin next to it.
 */
import * as fs from 'node:fs';
import * as path from 'node:path';

import * as tf from '@tensorflow/tfjs';

import './layers';

const MODEL_FILE = 'model.json';
const WEIGHTS_FILE = 'weights.bin';

function concatBuffers(data: ArrayBuffer | ArrayBuffer[]): Buffer {
  if (!Array.isArray(data)) {
    return Buffer.from(data);
  }
  return Buffer.concat(data.map((part) => Buffer.from(part)));
}

export async function saveModel(model: tf.LayersModel, dir: string): Promise<void> {
  fs.mkdirSync(dir, { recursive: true });
  await model.save(
    tf.io.withSaveHandler(async (artifacts) => {
      const manifest = {
        modelTopology: artifacts.modelTopology,
        format: 'layers-model',
        weightsManifest: [{ paths: [WEIGHTS_FILE], weights: artifacts.weightSpecs }],
      };
      fs.writeFileSync(path.join(dir, MODEL_FILE), JSON.stringify(manifest));
      fs.writeFileSync(path.join(dir, WEIGHTS_FILE), concatBuffers(artifacts.weightData ?? []));
      return {
        modelArtifactsInfo: { dateSaved: new Date(), modelTopologyType: 'JSON' as const },
      };
    }),
  );
}

export async function loadModel(dir: string): Promise<tf.LayersModel> {
  const manifestPath = path.join(dir, MODEL_FILE);
  if (!fs.existsSync(manifestPath)) {
    throw new Error(`no checkpoint at ${dir}`);
  }
  const manifest = JSON.parse(fs.readFileSync(manifestPath, 'utf8'));
  const weightSpecs = manifest.weightsManifest.flatMap(
    (group: { weights: tf.io.WeightsManifestEntry[] }) => group.weights,
  );
  const raw = fs.readFileSync(path.join(dir, WEIGHTS_FILE));
  const weightData = raw.buffer.slice(raw.byteOffset, raw.byteOffset + raw.byteLength);
  return tf.loadLayersModel(
    tf.io.fromMemory({ modelTopology: manifest.modelTopology, weightSpecs, weightData }),
  );
}
