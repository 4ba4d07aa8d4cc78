/**
 * Custom layers built on matMul primitives.
 *
 * The plain-JS backend has very slow conv2d backprop kernels and a broken
 * resizeBilinear gradient, so convolutions are expressed as im2col + matMul
 * and bilinear resizing as multiplication by constant interpolation
 * matrices. Parameter counts and outputs match the standard kernels.
 */
import * as tf from '@tensorflow/tfjs';

type Shape = (number | null)[];

function single(inputShape: Shape | Shape[]): Shape {
  return (Array.isArray(inputShape[0]) ? inputShape[0] : inputShape) as Shape;
}

function first(inputs: tf.Tensor | tf.Tensor[]): tf.Tensor {
  return Array.isArray(inputs) ? inputs[0] : inputs;
}

/** Endpoint-aligned linear interpolation matrix [target, source]. */
export function interpMatrix(source: number, target: number): tf.Tensor2D {
  const weights = new Float32Array(target * source);
  for (let i = 0; i < target; i++) {
    if (source === 1 || target === 1) {
      weights[i * source] = 1;
      continue;
    }
    const pos = (i * (source - 1)) / (target - 1);
    const j = Math.min(Math.floor(pos), source - 2);
    const frac = pos - j;
    weights[i * source + j] = 1 - frac;
    weights[i * source + j + 1] = frac;
  }
  return tf.tensor2d(weights, [target, source]);
}

/** Apply matrix m [T, S] along axis 1 of x [b, S, w, c]. */
function applyAlongHeight(x: tf.Tensor4D, m: tf.Tensor2D): tf.Tensor4D {
  const [b, s, w, c] = x.shape;
  const t = m.shape[0];
  const flat = x.transpose([1, 0, 2, 3]).reshape([s, b * w * c]);
  return tf.matMul(m, flat).reshape([t, b, w, c]).transpose([1, 0, 2, 3]);
}

export interface BilinearResizeConfig {
  target: [number, number];
  name?: string;
}

export class BilinearResize extends tf.layers.Layer {
  static className = 'BilinearResize';
  private readonly target: [number, number];
  private rows: tf.Tensor2D | null = null;
  private cols: tf.Tensor2D | null = null;

  constructor(config: BilinearResizeConfig) {
    super({ name: config.name });
    this.target = [config.target[0], config.target[1]];
  }

  override build(inputShape: Shape | Shape[]): void {
    const shape = single(inputShape);
    this.rows = tf.keep(interpMatrix(shape[1] as number, this.target[0]));
    this.cols = tf.keep(interpMatrix(shape[2] as number, this.target[1]));
    this.built = true;
  }

  override computeOutputShape(inputShape: Shape | Shape[]): Shape {
    const shape = single(inputShape);
    return [shape[0], this.target[0], this.target[1], shape[3]];
  }

  override call(inputs: tf.Tensor | tf.Tensor[]): tf.Tensor {
    return tf.tidy(() => {
      const x = first(inputs) as tf.Tensor4D;
      const up = applyAlongHeight(x, this.rows as tf.Tensor2D);
      const swapped = up.transpose([0, 2, 1, 3]) as tf.Tensor4D;
      return applyAlongHeight(swapped, this.cols as tf.Tensor2D).transpose([0, 2, 1, 3]);
    });
  }

  override dispose() {
    this.rows?.dispose();
    this.cols?.dispose();
    return super.dispose();
  }

  override getConfig(): tf.serialization.ConfigDict {
    return { ...super.getConfig(), target: this.target };
  }
}
tf.serialization.registerClass(BilinearResize);

export interface ConvConfig {
  filters: number;
  activation?: 'relu' | 'linear';
  zeroInit?: boolean;
  seed?: number;
  name?: string;
}

/** 3x3 same-padding convolution as im2col + matMul. */
export class Conv3x3 extends tf.layers.Layer {
  static className = 'Conv3x3';
  private readonly filters: number;
  private readonly activation: 'relu' | 'linear';
  private readonly zeroInit: boolean;
  private readonly seed?: number;
  private kernel!: tf.LayerVariable;
  private bias!: tf.LayerVariable;

  constructor(config: ConvConfig) {
    super({ name: config.name });
    this.filters = config.filters;
    this.activation = config.activation ?? 'linear';
    this.zeroInit = config.zeroInit ?? false;
    this.seed = config.seed;
  }

  override build(inputShape: Shape | Shape[]): void {
    const channels = single(inputShape)[3] as number;
    const initializer = this.zeroInit
      ? tf.initializers.zeros()
      : tf.initializers.heNormal({ seed: this.seed });
    this.kernel = this.addWeight('kernel', [9 * channels, this.filters], 'float32', initializer);
    this.bias = this.addWeight('bias', [this.filters], 'float32', tf.initializers.zeros());
    this.built = true;
  }

  override computeOutputShape(inputShape: Shape | Shape[]): Shape {
    const shape = single(inputShape);
    return [shape[0], shape[1], shape[2], this.filters];
  }

  override call(inputs: tf.Tensor | tf.Tensor[]): tf.Tensor {
    return tf.tidy(() => {
      const x = first(inputs) as tf.Tensor4D;
      const [b, h, w, c] = x.shape;
      const padded = tf.pad(x, [[0, 0], [1, 1], [1, 1], [0, 0]]);
      const patches: tf.Tensor4D[] = [];
      for (let dy = 0; dy < 3; dy++) {
        for (let dx = 0; dx < 3; dx++) {
          patches.push(tf.slice(padded, [0, dy, dx, 0], [b, h, w, c]));
        }
      }
      const columns = tf.concat(patches, 3).reshape([b * h * w, 9 * c]);
      const out = tf
        .matMul(columns, this.kernel.read() as tf.Tensor2D)
        .add(this.bias.read())
        .reshape([b, h, w, this.filters]);
      return this.activation === 'relu' ? tf.relu(out) : out;
    });
  }

  override getConfig(): tf.serialization.ConfigDict {
    return {
      ...super.getConfig(),
      filters: this.filters,
      activation: this.activation,
      zeroInit: this.zeroInit,
      seed: this.seed ?? null,
    };
  }
}
tf.serialization.registerClass(Conv3x3);

/** 1x1 convolution (pointwise linear map over channels). */
export class Conv1x1 extends tf.layers.Layer {
  static className = 'Conv1x1';
  private readonly filters: number;
  private readonly zeroInit: boolean;
  private readonly seed?: number;
  private kernel!: tf.LayerVariable;
  private bias!: tf.LayerVariable;

  constructor(config: ConvConfig) {
    super({ name: config.name });
    this.filters = config.filters;
    this.zeroInit = config.zeroInit ?? false;
    this.seed = config.seed;
  }

  override build(inputShape: Shape | Shape[]): void {
    const channels = single(inputShape)[3] as number;
    const initializer = this.zeroInit
      ? tf.initializers.zeros()
      : tf.initializers.glorotUniform({ seed: this.seed });
    this.kernel = this.addWeight('kernel', [channels, this.filters], 'float32', initializer);
    this.bias = this.addWeight('bias', [this.filters], 'float32', tf.initializers.zeros());
    this.built = true;
  }

  override computeOutputShape(inputShape: Shape | Shape[]): Shape {
    const shape = single(inputShape);
    return [shape[0], shape[1], shape[2], this.filters];
  }

  override call(inputs: tf.Tensor | tf.Tensor[]): tf.Tensor {
    return tf.tidy(() => {
      const x = first(inputs) as tf.Tensor4D;
      const [b, h, w, c] = x.shape;
      return tf
        .matMul(x.reshape([b * h * w, c]), this.kernel.read() as tf.Tensor2D)
        .add(this.bias.read())
        .reshape([b, h, w, this.filters]);
    });
  }

  override getConfig(): tf.serialization.ConfigDict {
    return {
      ...super.getConfig(),
      filters: this.filters,
      zeroInit: this.zeroInit,
      seed: this.seed ?? null,
    };
  }
}
tf.serialization.registerClass(Conv1x1);

export interface SelfAttentionConfig {
  heads: number;
  seed?: number;
  name?: string;
}

/** Multi-head scaled dot-product self-attention over [b, tokens, dModel]. */
export class SelfAttention extends tf.layers.Layer {
  static className = 'SelfAttention';
  private readonly heads: number;
  private readonly seed?: number;
  private wq!: tf.LayerVariable;
  private wk!: tf.LayerVariable;
  private wv!: tf.LayerVariable;
  private wo!: tf.LayerVariable;

  constructor(config: SelfAttentionConfig) {
    super({ name: config.name });
    this.heads = config.heads;
    this.seed = config.seed;
  }

  override build(inputShape: Shape | Shape[]): void {
    const d = single(inputShape)[2] as number;
    if (d % this.heads !== 0) {
      throw new Error(`model dim ${d} not divisible by ${this.heads} heads`);
    }
    const init = (offset: number) =>
      tf.initializers.glorotUniform({ seed: this.seed === undefined ? undefined : this.seed + offset });
    this.wq = this.addWeight('wq', [d, d], 'float32', init(0));
    this.wk = this.addWeight('wk', [d, d], 'float32', init(1));
    this.wv = this.addWeight('wv', [d, d], 'float32', init(2));
    this.wo = this.addWeight('wo', [d, d], 'float32', init(3));
    this.built = true;
  }

  override computeOutputShape(inputShape: Shape | Shape[]): Shape {
    return single(inputShape);
  }

  override call(inputs: tf.Tensor | tf.Tensor[]): tf.Tensor {
    return tf.tidy(() => {
      const x = first(inputs) as tf.Tensor3D;
      const [b, t, d] = x.shape;
      const dk = d / this.heads;
      const project = (w: tf.LayerVariable) =>
        tf
          .matMul(x.reshape([b * t, d]), w.read() as tf.Tensor2D)
          .reshape([b, t, this.heads, dk])
          .transpose([0, 2, 1, 3])
          .reshape([b * this.heads, t, dk]);
      const q = project(this.wq);
      const k = project(this.wk);
      const v = project(this.wv);
      const scores = tf.matMul(q, k, false, true).div(Math.sqrt(dk));
      const context = tf
        .matMul(tf.softmax(scores), v)
        .reshape([b, this.heads, t, dk])
        .transpose([0, 2, 1, 3])
        .reshape([b * t, d]);
      return tf.matMul(context, this.wo.read() as tf.Tensor2D).reshape([b, t, d]);
    });
  }

  override getConfig(): tf.serialization.ConfigDict {
    return { ...super.getConfig(), heads: this.heads, seed: this.seed ?? null };
  }
}
tf.serialization.registerClass(SelfAttention);
