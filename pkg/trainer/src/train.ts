/**
 * Training loop: l2 loss on normalized artifact targets, Adam with a
 * stepped learning-rate schedule, l2 weight regularization supplied by the
 * model's layers, and checkpointing in the tfjs layers format.
 */

import { mkdirSync, writeFileSync } from 'node:fs';
import { join } from 'node:path';

import * as tf from '@tensorflow/tfjs';

import { saveModel } from './checkpoint.js';
import { Manifest, TrainingPair, loadPairs, normalizeInput, normalizeTarget } from './dataset.js';
import { buildUnet, UnetOptions } from './model.js';

export interface TrainOptions {
  epochs: number;
  initialLr?: number;
  /** multiply the learning rate by lrGamma every lrStepEpochs epochs */
  lrStepEpochs?: number;
  lrGamma?: number;
  batchSize?: number;
  model?: UnetOptions;
}

export interface TrainResult {
  /** mean training loss per epoch (l2 data term plus weight penalty) */
  losses: number[];
  checkpointDir: string;
}

export class DivergenceError extends Error {}

function stackPairs(
  pairs: TrainingPair[],
  manifest: Manifest
): { xs: tf.Tensor4D; ys: tf.Tensor4D; size: number } {
  if (pairs.length === 0) throw new Error('dataset is empty');
  const size = pairs[0].input.nx;
  for (const p of pairs) {
    if (p.input.nx !== size || p.input.ny !== size) {
      throw new Error('all training images must share one square shape');
    }
  }
  const n = pairs.length;
  const xData = new Float32Array(n * size * size);
  const yData = new Float32Array(n * size * size);
  pairs.forEach((p, i) => {
    xData.set(normalizeInput(p.input.values, manifest.normalization), i * size * size);
    yData.set(normalizeTarget(p.artifact, manifest.normalization), i * size * size);
  });
  return {
    xs: tf.tensor4d(xData, [n, size, size, 1]),
    ys: tf.tensor4d(yData, [n, size, size, 1]),
    size,
  };
}

export async function trainOnPairs(
  pairs: TrainingPair[],
  manifest: Manifest,
  checkpointDir: string,
  opts: TrainOptions
): Promise<TrainResult> {
  const initialLr = opts.initialLr ?? 1e-3;
  const lrStepEpochs = opts.lrStepEpochs ?? 20;
  const lrGamma = opts.lrGamma ?? 0.1;
  const batchSize = opts.batchSize ?? Math.min(2, pairs.length);

  const { xs, ys, size } = stackPairs(pairs, manifest);
  const model = buildUnet({ size, ...opts.model });
  const optimizer = tf.train.adam(initialLr);
  model.compile({ optimizer, loss: 'meanSquaredError' });

  const losses: number[] = [];
  try {
    for (let epoch = 0; epoch < opts.epochs; epoch++) {
      const lr = initialLr * Math.pow(lrGamma, Math.floor(epoch / lrStepEpochs));
      (optimizer as unknown as { learningRate: number }).learningRate = lr;
      const history = await model.fit(xs, ys, {
        epochs: 1,
        batchSize,
        shuffle: false,
        verbose: 0,
      });
      const loss = Number(history.history.loss[0]);
      if (!Number.isFinite(loss)) {
        throw new DivergenceError(
          `training diverged: loss=${loss} at epoch ${epoch + 1}/${opts.epochs} (lr=${lr})`
        );
      }
      losses.push(loss);
    }
  } finally {
    xs.dispose();
    ys.dispose();
  }

  mkdirSync(checkpointDir, { recursive: true });
  await saveModel(model, checkpointDir);
  writeFileSync(
    join(checkpointDir, 'training.json'),
    `${JSON.stringify({ losses, normalization: manifest.normalization }, null, 2)}\n`
  );
  return { losses, checkpointDir };
}

export async function train(
  datasetDir: string,
  manifest: Manifest,
  checkpointDir: string,
  opts: TrainOptions
): Promise<TrainResult> {
  return trainOnPairs(loadPairs(datasetDir, manifest), manifest, checkpointDir, opts);
}
