/**
 * Cross-channel generalization experiment.
 *
 * Trains one model per training channel, scores each on held-out test
 * datasets, and checks two properties: a model trained on the designed
 * family should have a flat error profile across test channels, and a
 * model trained on a single fixed profile should transfer poorly to the
 * designed family.
 *
 * Dataset layout under the data root, one directory per channel, all
 * generated by the companion Python CLI:
 *   <root>/train/<channel>   training/validation split
 *   <root>/test/<channel>    held-out evaluation set
 */
import * as fs from 'node:fs';
import * as path from 'node:path';

import * as tf from '@tensorflow/tfjs';

import { batchTensors, trainModel } from './train';
import { complexMse } from './loss';
import { loadModel } from './io';
import { readDataset, writePredictions } from './dataset';
import { ModelName } from './models';

export const DEFAULT_TEST_CHANNELS = [
  'flat',
  'twopath',
  'epa',
  'eva',
  'etu',
  'dc1',
  'dc2',
  'dc3',
];

export interface ExperimentOptions {
  dataRoot: string;
  outDir: string;
  model: ModelName;
  epochs: number;
  batchSize?: number;
  learningRate?: number;
  lrDecayEvery?: number;
  seed?: number;
  trainChannels?: string[];
  testChannels?: string[];
}

export interface ExperimentSummary {
  model: ModelName;
  epochs: number;
  mse: Record<string, Record<string, number>>;
  spread: number | null;
  spreadOk: boolean | null;
  transferRatio: number | null;
  transferOk: boolean | null;
}

/** Mean complex MSE of a checkpoint over a dataset, plus a predictions file. */
export async function scoreCheckpoint(
  checkpointDir: string,
  datasetDir: string,
  predictionsFile: string,
  batchSize = 128,
): Promise<number> {
  const model = await loadModel(checkpointDir);
  const dataset = readDataset(datasetDir);
  const { samples, shapes } = dataset;
  const perSample = shapes.label[0] * shapes.label[1] * shapes.label[2];
  const records: Float32Array[] = [];
  let total = 0;
  for (let start = 0; start < samples.length; start += batchSize) {
    const indices = Array.from(
      { length: Math.min(batchSize, samples.length - start) },
      (_, i) => start + i,
    );
    const { x, y } = batchTensors(samples, indices, shapes);
    const pred = model.predict(x) as tf.Tensor;
    const flat = pred.dataSync() as Float32Array;
    total += complexMse(flat, y.dataSync() as Float32Array) * indices.length;
    for (let row = 0; row < indices.length; row++) {
      records.push(flat.slice(row * perSample, (row + 1) * perSample));
    }
    tf.dispose([x, y, pred]);
  }
  writePredictions(predictionsFile, records, samples.length);
  model.dispose();
  return total / samples.length;
}

export async function runExperiment(options: ExperimentOptions): Promise<ExperimentSummary> {
  const trainChannels = options.trainChannels ?? ['designed', 'dc3'];
  const testChannels = options.testChannels ?? DEFAULT_TEST_CHANNELS;
  const mse: Record<string, Record<string, number>> = {};
  fs.mkdirSync(options.outDir, { recursive: true });

  for (const trainCh of trainChannels) {
    const modelDir = path.join(options.outDir, trainCh);
    const result = await trainModel(path.join(options.dataRoot, 'train', trainCh), modelDir, {
      model: options.model,
      epochs: options.epochs,
      batchSize: options.batchSize,
      learningRate: options.learningRate,
      lrDecayEvery: options.lrDecayEvery,
      seed: options.seed,
    });
    mse[trainCh] = {};
    const evalChannels = new Set([...testChannels, ...trainChannels]);
    for (const testCh of evalChannels) {
      const testDir = path.join(options.dataRoot, 'test', testCh);
      if (!fs.existsSync(testDir)) {
        continue;
      }
      mse[trainCh][testCh] = await scoreCheckpoint(
        result.checkpointDir,
        testDir,
        path.join(modelDir, `predictions-${testCh}.bin`),
        options.batchSize,
      );
    }
  }

  let spread: number | null = null;
  let spreadOk: boolean | null = null;
  const designed = mse['designed'];
  if (designed) {
    const scores = testChannels.filter((c) => c in designed).map((c) => designed[c]);
    if (scores.length > 0) {
      spread = Math.max(...scores) / Math.min(...scores);
      spreadOk = spread <= 2.0;
    }
  }

  let transferRatio: number | null = null;
  let transferOk: boolean | null = null;
  const narrow = mse['dc3'];
  if (narrow && 'designed' in narrow && 'dc3' in narrow) {
    transferRatio = narrow['designed'] / narrow['dc3'];
    transferOk = transferRatio >= 2.0;
  }

  const rows = ['train_channel,test_channel,mse'];
  for (const trainCh of Object.keys(mse)) {
    for (const testCh of Object.keys(mse[trainCh])) {
      rows.push(`${trainCh},${testCh},${mse[trainCh][testCh]}`);
    }
  }
  fs.writeFileSync(path.join(options.outDir, 'experiment.csv'), rows.join('\n') + '\n');

  const summary: ExperimentSummary = {
    model: options.model,
    epochs: options.epochs,
    mse,
    spread,
    spreadOk,
    transferRatio,
    transferOk,
  };
  fs.writeFileSync(
    path.join(options.outDir, 'summary.json'),
    JSON.stringify(summary, null, 2) + '\n',
  );
  return summary;
}
