import * as tf from '@tensorflow/tfjs';
import { beforeAll, describe, expect, it } from 'vitest';

import { complexMse, huber, huberDerivative, huberLoss } from '../src/loss';

beforeAll(async () => {
  await tf.setBackend('cpu');
});

describe('huber', () => {
  it('matches the closed form at reference points', () => {
    expect(huber(0)).toBe(0);
    expect(huber(0.5)).toBe(0.125);
    expect(huber(-0.5)).toBe(0.125);
    expect(huber(1)).toBe(0.5);
    expect(huber(-1)).toBe(0.5);
    expect(huber(3)).toBe(2.5);
    expect(huber(-3)).toBe(2.5);
  });

  it('is continuously differentiable at the transition', () => {
    // one-sided difference quotients at the seam measure the derivative jump
    const h = 1e-7;
    for (const a of [1, -1]) {
      const left = (huber(a) - huber(a - h * Math.sign(a))) / (h * Math.sign(a));
      const right = (huber(a + h * Math.sign(a)) - huber(a)) / (h * Math.sign(a));
      expect(Math.abs(right - left)).toBeLessThanOrEqual(1e-6);
      const jump = huberDerivative(a + 1e-7 * Math.sign(a)) - huberDerivative(a - 1e-7 * Math.sign(a));
      expect(Math.abs(jump)).toBeLessThanOrEqual(1e-6);
    }
  });

  it('is continuous at the transition', () => {
    expect(Math.abs(huber(1 + 1e-9) - huber(1 - 1e-9))).toBeLessThan(1e-8);
  });
});

describe('huberLoss', () => {
  it('agrees with the scalar implementation', () => {
    const values = [0, 0.5, -0.5, 1, -1, 0.999, 1.001, 3, -3, 10];
    const pred = tf.tensor1d(values);
    const target = tf.zeros([values.length]);
    const expected = values.reduce((acc, v) => acc + huber(Math.fround(v)), 0) / values.length;
    const loss = huberLoss(pred, target).dataSync()[0];
    expect(loss).toBeCloseTo(expected, 6);
  });

  it('is zero for a perfect prediction', () => {
    const x = tf.tensor2d([[1, 2], [3, 4]]);
    expect(huberLoss(x, x).dataSync()[0]).toBe(0);
  });

  it('is differentiable end to end', () => {
    const target = tf.tensor1d([0, 0, 0]);
    const grad = tf.grad((p: tf.Tensor) => huberLoss(p, target));
    const g = grad(tf.tensor1d([0.5, 2, -2])).dataSync();
    // d/dp mean(huber(p)): quadratic branch gives p/3, linear gives sign/3
    expect(g[0]).toBeCloseTo(0.5 / 3, 6);
    expect(g[1]).toBeCloseTo(1 / 3, 6);
    expect(g[2]).toBeCloseTo(-1 / 3, 6);
  });
});

describe('complexMse', () => {
  it('is zero for identical tensors', () => {
    const a = new Float32Array([1, 2, 3, 4]);
    expect(complexMse(a, a)).toBe(0);
  });

  it('sums plane errors per element', () => {
    // every plane off by 1: squared complex error is 2 per element
    const pred = new Float32Array([1, 1, 1, 1]);
    const label = new Float32Array([0, 0, 0, 0]);
    expect(complexMse(pred, label)).toBe(2);
  });

  it('rejects mismatched lengths', () => {
    expect(() => complexMse(new Float32Array(2), new Float32Array(4))).toThrow(/length mismatch/);
  });
});
