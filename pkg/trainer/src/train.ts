/**
 * Training loop: Adam on Huber loss with a step learning-rate schedule,
 * an L2 penalty on kernel weights, and a CSV epoch log.
 */
import * as fs from 'node:fs';
import * as path from 'node:path';

import * as tf from '@tensorflow/tfjs';

import { Dataset, Sample, Shapes, readDataset } from './dataset';
import { huberLoss } from './loss';
import { saveModel } from './io';
import { ModelName, buildModel } from './models';

export interface TrainOptions {
  model: ModelName;
  epochs: number;
  batchSize?: number;
  learningRate?: number;
  lrDecayEvery?: number;
  weightDecay?: number;
  seed?: number;
}

export interface TrainResult {
  checkpointDir: string;
  logPath: string;
  epochs: EpochStats[];
}

export interface EpochStats {
  epoch: number;
  trainLoss: number;
  valLoss: number | null;
  lr: number;
}

/** Deterministic 32-bit PRNG for shuffling. */
export function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function shuffled(count: number, rand: () => number): number[] {
  const order = Array.from({ length: count }, (_, i) => i);
  for (let i = count - 1; i > 0; i--) {
    const j = Math.floor(rand() * (i + 1));
    [order[i], order[j]] = [order[j], order[i]];
  }
  return order;
}

function elements(shape: [number, number, number]): number {
  return shape[0] * shape[1] * shape[2];
}

/** Stack selected samples into input and label batch tensors. */
export function batchTensors(
  samples: Sample[],
  indices: number[],
  shapes: Shapes,
): { x: tf.Tensor4D; y: tf.Tensor4D } {
  const nIn = elements(shapes.input);
  const nLabel = elements(shapes.label);
  const xBuf = new Float32Array(indices.length * nIn);
  const yBuf = new Float32Array(indices.length * nLabel);
  indices.forEach((sample, row) => {
    xBuf.set(samples[sample].input, row * nIn);
    yBuf.set(samples[sample].label, row * nLabel);
  });
  return {
    x: tf.tensor4d(xBuf, [indices.length, ...shapes.input]),
    y: tf.tensor4d(yBuf, [indices.length, ...shapes.label]),
  };
}

function kernelWeights(model: tf.LayersModel): tf.Variable[] {
  return model.trainableWeights
    .filter((w) => /(kernel|w[qkvo])$/.test(w.name.replace(/_\d+$/, '')))
    .map((w) => w.read() as tf.Variable);
}

function meanLoss(model: tf.LayersModel, samples: Sample[], shapes: Shapes, batchSize: number): number {
  if (samples.length === 0) {
    return NaN;
  }
  let total = 0;
  for (let start = 0; start < samples.length; start += batchSize) {
    const indices = Array.from(
      { length: Math.min(batchSize, samples.length - start) },
      (_, i) => start + i,
    );
    const { x, y } = batchTensors(samples, indices, shapes);
    const loss = tf.tidy(() => huberLoss(model.predict(x) as tf.Tensor, y));
    total += loss.dataSync()[0] * indices.length;
    tf.dispose([x, y, loss]);
  }
  return total / samples.length;
}

export async function trainModel(
  datasetDir: string,
  outDir: string,
  options: TrainOptions,
): Promise<TrainResult> {
  const batchSize = options.batchSize ?? 128;
  const lr0 = options.learningRate ?? 2e-3;
  const decayEvery = options.lrDecayEvery ?? 20;
  const weightDecay = options.weightDecay ?? 1e-7;
  const seed = options.seed ?? 0;

  const train: Dataset = readDataset(datasetDir, 'train');
  const val: Dataset = readDataset(datasetDir, 'val');
  if (train.samples.length === 0) {
    throw new Error('training split is empty');
  }
  const shapes = train.shapes;

  const model = buildModel(options.model, { inputShape: shapes.input, seed });
  const optimizer = tf.train.adam(lr0);
  const penalized = kernelWeights(model);
  const rand = mulberry32(seed);

  fs.mkdirSync(outDir, { recursive: true });
  const logPath = path.join(outDir, 'training_log.csv');
  const log = ['epoch,train_loss,val_loss,lr'];
  const history: EpochStats[] = [];

  for (let epoch = 0; epoch < options.epochs; epoch++) {
    const lr = lr0 * 0.5 ** Math.floor(epoch / decayEvery);
    (optimizer as unknown as { learningRate: number }).learningRate = lr;

    const order = shuffled(train.samples.length, rand);
    let lossSum = 0;
    for (let start = 0; start < order.length; start += batchSize) {
      const indices = order.slice(start, start + batchSize);
      const { x, y } = batchTensors(train.samples, indices, shapes);
      const cost = optimizer.minimize(
        () => {
          const pred = model.apply(x, { training: true }) as tf.Tensor;
          let loss = huberLoss(pred, y) as tf.Tensor<tf.Rank.R0>;
          for (const w of penalized) {
            loss = loss.add(w.square().sum().mul(weightDecay));
          }
          return loss as tf.Scalar;
        },
        true,
      ) as tf.Scalar;
      lossSum += cost.dataSync()[0] * indices.length;
      tf.dispose([x, y, cost]);
    }

    const trainLoss = lossSum / train.samples.length;
    const rawVal = meanLoss(model, val.samples, shapes, batchSize);
    const valLoss = Number.isNaN(rawVal) ? null : rawVal;
    history.push({ epoch, trainLoss, valLoss, lr });
    log.push(`${epoch},${trainLoss},${valLoss ?? ''},${lr}`);
  }

  fs.writeFileSync(logPath, log.join('\n') + '\n');
  const checkpointDir = path.join(outDir, 'checkpoint');
  await saveModel(model, checkpointDir);
  fs.writeFileSync(
    path.join(outDir, 'train-config.json'),
    JSON.stringify(
      {
        dataset: path.resolve(datasetDir),
        model: options.model,
        epochs: options.epochs,
        batch_size: batchSize,
        learning_rate: lr0,
        lr_decay_every: decayEvery,
        weight_decay: weightDecay,
        seed,
      },
      null,
      2,
    ) + '\n',
  );

  optimizer.dispose();
  model.dispose();
  return { checkpointDir, logPath, epochs: history };
}
