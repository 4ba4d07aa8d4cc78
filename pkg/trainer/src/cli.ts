#!/usr/bin/env node
/**
 * Command line entry point.
 *
 * Exit codes: 1 for usage errors, 2 for runtime failures.
 */
import { parseArgs } from 'node:util';

import { predictDataset } from './predict';
import { runExperiment } from './experiment';
import { trainModel } from './train';
import { MODEL_NAMES, ModelName } from './models';

const USAGE = `usage: chanest-trainer <command> [options]

commands:
  train       train a model on a dataset directory
    --dataset DIR          dataset directory (required)
    --out DIR              output directory (required)
    --model NAME           interpolate-net | ha02 (default interpolate-net)
    --epochs N             training epochs (default 30)
    --batch-size N         minibatch size (default 128)
    --learning-rate F      initial Adam step (default 2e-3)
    --lr-decay-every N     halve the rate every N epochs (default 20)
    --weight-decay F       L2 penalty on kernels (default 1e-7)
    --seed N               shuffle and init seed (default 0)

  predict     run a checkpoint over a dataset, write predictions
    --checkpoint DIR       checkpoint directory (required)
    --dataset DIR          dataset directory (required)
    --out FILE             predictions file (required)
    --batch-size N         inference batch size (default 128)

  experiment  cross-channel generalization study
    --data-root DIR        root with train/<ch> and test/<ch> datasets (required)
    --out DIR              output directory (required)
    --model NAME           interpolate-net | ha02 (default interpolate-net)
    --epochs N             override the epoch count
    --full                 full-scale settings (30 epochs; default is a 2-epoch smoke run)
    --batch-size N         minibatch size (default 128)
    --learning-rate F      initial Adam step (default 2e-3)
    --seed N               shuffle and init seed (default 0)
    --train-channels LIST  comma list (default designed,dc3)
    --test-channels LIST   comma list (default flat,twopath,epa,eva,etu,dc1,dc2,dc3)
`;

class UsageError extends Error {}

function usageFail(message: string): never {
  throw new UsageError(message);
}

function num(value: string | undefined, name: string, fallback: number): number {
  if (value === undefined) {
    return fallback;
  }
  const parsed = Number(value);
  if (!Number.isFinite(parsed)) {
    usageFail(`invalid number for ${name}: ${value}`);
  }
  return parsed;
}

function required(value: string | undefined, name: string): string {
  if (value === undefined) {
    usageFail(`missing required option ${name}`);
  }
  return value;
}

function modelName(value: string | undefined): ModelName {
  const name = value ?? 'interpolate-net';
  if (!(MODEL_NAMES as readonly string[]).includes(name)) {
    usageFail(`unknown model: ${name}`);
  }
  return name as ModelName;
}

function parse(argv: string[], options: Record<string, { type: 'string' | 'boolean' }>) {
  try {
    return parseArgs({ args: argv, options, allowPositionals: false }).values;
  } catch (err) {
    usageFail((err as Error).message);
  }
}

async function cmdTrain(argv: string[]): Promise<void> {
  const args = parse(argv, {
    dataset: { type: 'string' },
    out: { type: 'string' },
    model: { type: 'string' },
    epochs: { type: 'string' },
    'batch-size': { type: 'string' },
    'learning-rate': { type: 'string' },
    'lr-decay-every': { type: 'string' },
    'weight-decay': { type: 'string' },
    seed: { type: 'string' },
  });
  const result = await trainModel(
    required(args.dataset as string | undefined, '--dataset'),
    required(args.out as string | undefined, '--out'),
    {
      model: modelName(args.model as string | undefined),
      epochs: num(args.epochs as string | undefined, '--epochs', 30),
      batchSize: num(args['batch-size'] as string | undefined, '--batch-size', 128),
      learningRate: num(args['learning-rate'] as string | undefined, '--learning-rate', 2e-3),
      lrDecayEvery: num(args['lr-decay-every'] as string | undefined, '--lr-decay-every', 20),
      weightDecay: num(args['weight-decay'] as string | undefined, '--weight-decay', 1e-7),
      seed: num(args.seed as string | undefined, '--seed', 0),
    },
  );
  const last = result.epochs[result.epochs.length - 1];
  console.log(`checkpoint: ${result.checkpointDir}`);
  console.log(`log: ${result.logPath}`);
  console.log(`final train loss: ${last.trainLoss}`);
  if (last.valLoss !== null) {
    console.log(`final val loss: ${last.valLoss}`);
  }
}

async function cmdPredict(argv: string[]): Promise<void> {
  const args = parse(argv, {
    checkpoint: { type: 'string' },
    dataset: { type: 'string' },
    out: { type: 'string' },
    'batch-size': { type: 'string' },
  });
  const result = await predictDataset(
    required(args.checkpoint as string | undefined, '--checkpoint'),
    required(args.dataset as string | undefined, '--dataset'),
    required(args.out as string | undefined, '--out'),
    num(args['batch-size'] as string | undefined, '--batch-size', 128),
  );
  if (result.file === null) {
    console.log('empty dataset, nothing to predict');
  } else {
    console.log(`wrote ${result.count} predictions to ${result.file}`);
  }
}

async function cmdExperiment(argv: string[]): Promise<void> {
  const args = parse(argv, {
    'data-root': { type: 'string' },
    out: { type: 'string' },
    model: { type: 'string' },
    epochs: { type: 'string' },
    full: { type: 'boolean' },
    'batch-size': { type: 'string' },
    'learning-rate': { type: 'string' },
    seed: { type: 'string' },
    'train-channels': { type: 'string' },
    'test-channels': { type: 'string' },
  });
  const full = (args.full as boolean | undefined) ?? false;
  const summary = await runExperiment({
    dataRoot: required(args['data-root'] as string | undefined, '--data-root'),
    outDir: required(args.out as string | undefined, '--out'),
    model: modelName(args.model as string | undefined),
    epochs: num(args.epochs as string | undefined, '--epochs', full ? 30 : 2),
    batchSize: num(args['batch-size'] as string | undefined, '--batch-size', 128),
    learningRate: num(args['learning-rate'] as string | undefined, '--learning-rate', 2e-3),
    seed: num(args.seed as string | undefined, '--seed', 0),
    trainChannels: (args['train-channels'] as string | undefined)?.split(','),
    testChannels: (args['test-channels'] as string | undefined)?.split(','),
  });
  for (const trainCh of Object.keys(summary.mse)) {
    for (const testCh of Object.keys(summary.mse[trainCh])) {
      console.log(`mse ${trainCh} -> ${testCh}: ${summary.mse[trainCh][testCh]}`);
    }
  }
  let failed = false;
  if (summary.spread !== null) {
    console.log(
      `[experiment] spread: ${summary.spreadOk ? 'PASS' : 'FAIL'} - max/min ${summary.spread.toFixed(3)} (limit 2.0)`,
    );
    failed = failed || !summary.spreadOk;
  }
  if (summary.transferRatio !== null) {
    console.log(
      `[experiment] transfer: ${summary.transferOk ? 'PASS' : 'FAIL'} - ratio ${summary.transferRatio.toFixed(3)} (needs >= 2.0)`,
    );
    failed = failed || !summary.transferOk;
  }
  if (failed) {
    process.exitCode = 2;
  }
}

export async function main(argv: string[]): Promise<number> {
  const [command, ...rest] = argv;
  try {
    if (command === 'train') {
      await cmdTrain(rest);
    } else if (command === 'predict') {
      await cmdPredict(rest);
    } else if (command === 'experiment') {
      await cmdExperiment(rest);
    } else {
      usageFail(command === undefined ? 'missing command' : `unknown command: ${command}`);
    }
  } catch (err) {
    if (err instanceof UsageError) {
      process.stderr.write(`error: ${err.message}\n${USAGE}`);
      return 1;
    }
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 2;
  }
  return Number(process.exitCode ?? 0);
}

if (require.main === module) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
