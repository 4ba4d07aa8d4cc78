/**
 * Batch inference over a dataset directory, writing a predictions file
 * that the evaluation harness can score against the dataset labels.
 */
import * as tf from '@tensorflow/tfjs';

import { batchTensors } from './train';
import { Dataset, readDataset, writePredictions } from './dataset';
import { loadModel } from './io';

export interface PredictResult {
  count: number;
  file: string | null;
}

function* inferred(model: tf.LayersModel, dataset: Dataset, batchSize: number) {
  const { samples, shapes } = dataset;
  const perSample = shapes.label[0] * shapes.label[1] * shapes.label[2];
  for (let start = 0; start < samples.length; start += batchSize) {
    const indices = Array.from(
      { length: Math.min(batchSize, samples.length - start) },
      (_, i) => start + i,
    );
    const { x, y } = batchTensors(samples, indices, shapes);
    const pred = model.predict(x) as tf.Tensor;
    const flat = pred.dataSync() as Float32Array;
    tf.dispose([x, y, pred]);
    for (let row = 0; row < indices.length; row++) {
      yield flat.slice(row * perSample, (row + 1) * perSample);
    }
  }
}

export async function predictDataset(
  checkpointDir: string,
  datasetDir: string,
  outFile: string,
  batchSize = 128,
): Promise<PredictResult> {
  const dataset = readDataset(datasetDir);
  if (dataset.samples.length === 0) {
    return { count: 0, file: null };
  }
  const model = await loadModel(checkpointDir);
  writePredictions(outFile, inferred(model, dataset, batchSize), dataset.samples.length);
  model.dispose();
  return { count: dataset.samples.length, file: outFile };
}
