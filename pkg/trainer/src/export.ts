/**
 * Prior export: subtract the denormalized predicted artifact from the FBP
 * input and write the result in the reconstruction CLI's raw image format.
 */

import { readFileSync } from 'node:fs';
import { join } from 'node:path';

import * as tf from '@tensorflow/tfjs';

import { loadModel } from './checkpoint.js';
import { Normalization, denormalizeTarget, normalizeInput } from './dataset.js';
import { MU_UNIT, RawImage, readImage, writeImage } from './format.js';

export function checkpointNormalization(checkpointDir: string): Normalization {
  const meta = JSON.parse(
    readFileSync(join(checkpointDir, 'training.json'), 'utf8')
  );
  return meta.normalization as Normalization;
}

/** Network prediction for one image, denormalized to attenuation units. */
export async function predictArtifact(
  model: tf.LayersModel,
  fbp: RawImage,
  norm: Normalization
): Promise<Float64Array> {
  const inputShape = model.inputs[0].shape; // [null, ny, nx, 1]
  if (inputShape[1] !== fbp.ny || inputShape[2] !== fbp.nx) {
    throw new Error(
      `model expects ${inputShape[1]}x${inputShape[2]}, image is ${fbp.ny}x${fbp.nx}`
    );
  }
  const x = tf.tensor4d(normalizeInput(fbp.values, norm), [1, fbp.ny, fbp.nx, 1]);
  const y = model.predict(x) as tf.Tensor;
  const pred = new Float32Array(await y.data());
  x.dispose();
  y.dispose();
  return denormalizeTarget(pred, norm);
}

export function subtractArtifact(fbp: RawImage, artifactMu: Float64Array): RawImage {
  const values = new Float64Array(fbp.values.length);
  for (let i = 0; i < values.length; i++) {
    values[i] = fbp.values[i] - artifactMu[i];
  }
  return { ...fbp, unit: MU_UNIT, values };
}

export async function exportPrior(
  checkpointDir: string,
  fbpPath: string,
  outPath: string
): Promise<RawImage> {
  const model = await loadModel(checkpointDir);
  const norm = checkpointNormalization(checkpointDir);
  const fbp = readImage(fbpPath);
  const artifact = await predictArtifact(model, fbp, norm);
  const prior = subtractArtifact(fbp, artifact);
  writeImage(outPath, prior);
  return prior;
}
