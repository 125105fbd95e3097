/**
 * Checkpoint I/O for the pure-JS tfjs runtime: topology and weight specs in
 * `model.json`, raw weight bytes in `weights.bin`.
 */

import { mkdirSync, readFileSync, writeFileSync } from 'node:fs';
import { join } from 'node:path';

import * as tf from '@tensorflow/tfjs';

function concatBuffers(data: ArrayBuffer | ArrayBuffer[]): Buffer {
  if (Array.isArray(data)) {
    return Buffer.concat(data.map((b) => Buffer.from(b)));
  }
  return Buffer.from(data);
}

export async function saveModel(model: tf.LayersModel, dir: string): Promise<void> {
  mkdirSync(dir, { recursive: true });
  await model.save(
    tf.io.withSaveHandler(async (artifacts) => {
      writeFileSync(
        join(dir, 'model.json'),
        `${JSON.stringify(
          {
            modelTopology: artifacts.modelTopology,
            weightSpecs: artifacts.weightSpecs,
          },
          null,
          2
        )}\n`
      );
      writeFileSync(
        join(dir, 'weights.bin'),
        concatBuffers(artifacts.weightData as ArrayBuffer | ArrayBuffer[])
      );
      return {
        modelArtifactsInfo: {
          dateSaved: new Date(),
          modelTopologyType: 'JSON' as const,
        },
      };
    })
  );
}

export async function loadModel(dir: string): Promise<tf.LayersModel> {
  const meta = JSON.parse(readFileSync(join(dir, 'model.json'), 'utf8'));
  const weights = readFileSync(join(dir, 'weights.bin'));
  const weightData = weights.buffer.slice(
    weights.byteOffset,
    weights.byteOffset + weights.byteLength
  );
  return tf.loadLayersModel(
    tf.io.fromMemory({
      modelTopology: meta.modelTopology,
      weightSpecs: meta.weightSpecs,
      weightData,
    })
  );
}
