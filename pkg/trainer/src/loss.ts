/**
 * Huber loss with unit transition point: 0.5 a^2 for |a| <= 1, |a| - 0.5
 * beyond. Scalar float64 version for checks, tensor version for training.
 */
import * as tf from '@tensorflow/tfjs';

export function huber(a: number): number {
  const abs = Math.abs(a);
  return abs <= 1 ? 0.5 * a * a : abs - 0.5;
}

export function huberDerivative(a: number): number {
  return Math.abs(a) <= 1 ? a : Math.sign(a);
}

/** Mean Huber loss over all elements of (pred - target). */
export function huberLoss(pred: tf.Tensor, target: tf.Tensor): tf.Scalar {
  return tf.tidy(() => {
    // min form keeps every op differentiable: q = min(|d|, 1),
    // loss = 0.5 q^2 + (|d| - q), which matches the piecewise definition.
    const abs = pred.sub(target).abs();
    const q = tf.minimum(abs, 1);
    return q.square().mul(0.5).add(abs.sub(q)).mean();
  });
}

/**
 * MSE with the evaluation harness's convention: mean over resource elements
 * of squared complex error, i.e. the real and imaginary plane errors are
 * summed per element, not averaged.
 */
export function complexMse(pred: Float32Array, label: Float32Array): number {
  if (pred.length !== label.length) {
    throw new Error(`length mismatch: ${pred.length} vs ${label.length}`);
  }
  let total = 0;
  for (let i = 0; i < pred.length; i++) {
    const d = pred[i] - label[i];
    total += d * d;
  }
  return (2 * total) / pred.length;
}
