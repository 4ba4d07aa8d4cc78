/**
 * Model builders.
 *
 * Both nets map pilot-grid estimates [nSc, nSym, 2] to full-slot estimates
 * [72, 14, 2] and start from a bilinear upsample of the input, with a
 * zero-initialised head so the initial output equals plain interpolation
 * and training only has to learn the correction.
 */
import * as tf from '@tensorflow/tfjs';

import { BilinearResize, Conv1x1, Conv3x3, SelfAttention } from './layers';

export const MODEL_NAMES = ['interpolate-net', 'ha02'] as const;
export type ModelName = (typeof MODEL_NAMES)[number];

export interface ModelOptions {
  inputShape: [number, number, number];
  outputShape?: [number, number, number];
  seed?: number;
}

/** Interpolation front end with a small convolutional correction stack. */
export function interpolateNet(options: ModelOptions): tf.LayersModel {
  const { inputShape, seed } = options;
  const [rows, cols] = options.outputShape ?? [72, 14, 2];
  const input = tf.input({ shape: inputShape });
  const resized = new BilinearResize({ target: [rows, cols], name: 'resize' }).apply(
    input,
  ) as tf.SymbolicTensor;
  let x = new Conv3x3({ filters: 24, activation: 'relu', seed, name: 'conv1' }).apply(
    resized,
  ) as tf.SymbolicTensor;
  x = new Conv3x3({
    filters: 40,
    activation: 'relu',
    seed: seed === undefined ? undefined : seed + 1,
    name: 'conv2',
  }).apply(x) as tf.SymbolicTensor;
  x = new Conv1x1({ filters: inputShape[2], zeroInit: true, name: 'head' }).apply(
    x,
  ) as tf.SymbolicTensor;
  const output = tf.layers.add({ name: 'residual' }).apply([resized, x]) as tf.SymbolicTensor;
  return tf.model({ inputs: input, outputs: output, name: 'interpolate-net' });
}

/** One transformer encoder block over pilot tokens, then a conv decoder. */
export function ha02(options: ModelOptions): tf.LayersModel {
  const { inputShape, seed } = options;
  const [rows, cols] = options.outputShape ?? [72, 14, 2];
  const [sc, sym, ch] = inputShape;
  const dModel = 32;
  const dense = (units: number, activation: string | undefined, offset: number, name: string) =>
    tf.layers.dense({
      units,
      activation: activation as 'relu' | undefined,
      kernelInitializer: tf.initializers.glorotUniform({
        seed: seed === undefined ? undefined : seed + offset,
      }),
      name,
    });

  const input = tf.input({ shape: inputShape });
  const tokens = tf.layers
    .reshape({ targetShape: [sc * sym, ch], name: 'tokens' })
    .apply(input) as tf.SymbolicTensor;
  let x = dense(dModel, undefined, 0, 'embed').apply(tokens) as tf.SymbolicTensor;

  let normed = tf.layers.layerNormalization({ name: 'ln1' }).apply(x) as tf.SymbolicTensor;
  const attended = new SelfAttention({
    heads: 4,
    seed: seed === undefined ? undefined : seed + 10,
    name: 'attention',
  }).apply(normed) as tf.SymbolicTensor;
  x = tf.layers.add({ name: 'attn_residual' }).apply([x, attended]) as tf.SymbolicTensor;

  normed = tf.layers.layerNormalization({ name: 'ln2' }).apply(x) as tf.SymbolicTensor;
  let ffn = dense(2 * dModel, 'relu', 1, 'ffn1').apply(normed) as tf.SymbolicTensor;
  ffn = dense(dModel, undefined, 2, 'ffn2').apply(ffn) as tf.SymbolicTensor;
  x = tf.layers.add({ name: 'ffn_residual' }).apply([x, ffn]) as tf.SymbolicTensor;

  x = dense(ch, undefined, 3, 'project').apply(x) as tf.SymbolicTensor;
  x = tf.layers
    .reshape({ targetShape: [sc, sym, ch], name: 'grid' })
    .apply(x) as tf.SymbolicTensor;
  x = new BilinearResize({ target: [rows, cols], name: 'upsample' }).apply(
    x,
  ) as tf.SymbolicTensor;
  x = new Conv3x3({
    filters: 16,
    activation: 'relu',
    seed: seed === undefined ? undefined : seed + 20,
    name: 'decode1',
  }).apply(x) as tf.SymbolicTensor;
  x = new Conv1x1({ filters: ch, zeroInit: true, name: 'decode2' }).apply(
    x,
  ) as tf.SymbolicTensor;

  const skip = new BilinearResize({ target: [rows, cols], name: 'skip' }).apply(
    input,
  ) as tf.SymbolicTensor;
  const output = tf.layers.add({ name: 'residual' }).apply([skip, x]) as tf.SymbolicTensor;
  return tf.model({ inputs: input, outputs: output, name: 'ha02' });
}

export function buildModel(name: ModelName, options: ModelOptions): tf.LayersModel {
  if (name === 'interpolate-net') {
    return interpolateNet(options);
  }
  if (name === 'ha02') {
    return ha02(options);
  }
  throw new Error(`unknown model: ${name}`);
}
