/**
 * Reduced-width U-Net for residual learning: the network sees a normalized
 * limited-angle FBP slice and predicts its artifact image. The contracting/
 * expanding topology with skip connections is kept; channel counts are cut
 * far below clinical scale so desk-size training finishes in minutes.
 */

import * as tf from '@tensorflow/tfjs';

export interface UnetOptions {
  size?: number;
  /** channels of the first encoder level; doubles per level */
  baseWidth?: number;
  levels?: number;
  l2?: number;
  seed?: number;
}

export function buildUnet(opts: UnetOptions = {}): tf.LayersModel {
  const size = opts.size ?? 128;
  const baseWidth = opts.baseWidth ?? 8;
  const levels = opts.levels ?? 2;
  const l2 = opts.l2 ?? 1e-4;
  const seed = opts.seed ?? 1;

  let nextSeed = seed;
  const conv = (x: tf.SymbolicTensor, filters: number, name: string) =>
    tf.layers
      .conv2d({
        filters,
        kernelSize: 3,
        padding: 'same',
        activation: 'relu',
        kernelInitializer: tf.initializers.glorotUniform({ seed: nextSeed++ }),
        kernelRegularizer: tf.regularizers.l2({ l2 }),
        name,
      })
      .apply(x) as tf.SymbolicTensor;

  const input = tf.input({ shape: [size, size, 1], name: 'fbp' });
  const skips: tf.SymbolicTensor[] = [];
  let x = input;
  for (let level = 0; level < levels; level++) {
    const width = baseWidth << level;
    x = conv(x, width, `enc${level}a`);
    x = conv(x, width, `enc${level}b`);
    skips.push(x);
    x = tf.layers
      .maxPooling2d({ poolSize: 2, name: `down${level}` })
      .apply(x) as tf.SymbolicTensor;
  }
  const bottomWidth = baseWidth << levels;
  x = conv(x, bottomWidth, 'bottom_a');
  x = conv(x, bottomWidth, 'bottom_b');
  for (let level = levels - 1; level >= 0; level--) {
    const width = baseWidth << level;
    x = tf.layers
      .upSampling2d({ size: [2, 2], name: `up${level}` })
      .apply(x) as tf.SymbolicTensor;
    x = conv(x, width, `up${level}a`);
    x = tf.layers
      .concatenate({ name: `skip${level}` })
      .apply([skips[level], x]) as tf.SymbolicTensor;
    x = conv(x, width, `dec${level}a`);
    x = conv(x, width, `dec${level}b`);
  }
  const artifact = tf.layers
    .conv2d({
      filters: 1,
      kernelSize: 1,
      padding: 'same',
      activation: 'linear',
      kernelInitializer: tf.initializers.glorotUniform({ seed: nextSeed++ }),
      name: 'artifact',
    })
    .apply(x) as tf.SymbolicTensor;

  return tf.model({ inputs: input, outputs: artifact, name: 'artifact_unet' });
}
