/**
 * Synthetic training corpus: randomized phantoms, their limited-angle FBP
 * reconstructions, and artifact targets (FBP minus ground truth). All
 * ground truths and FBP inputs come from the reconstruction CLI, so the
 * corpus is bit-reproducible for a fixed seed.
 */

import { mkdirSync, readFileSync, writeFileSync } from 'node:fs';
import { join } from 'node:path';

import { RawImage, readImage, runPrimary } from './format.js';

export interface Normalization {
  /** HU range mapped onto [0, 1] for network inputs */
  loHu: number;
  hiHu: number;
  /** water attenuation used for the HU conversion, mm^-1 */
  muWater: number;
}

export const DEFAULT_NORMALIZATION: Normalization = {
  loHu: -1000,
  hiHu: 2000,
  muWater: 0.02,
};

export interface DatasetOptions {
  nPhantoms: number;
  seed: number;
  outDir: string;
  /** apply photon-counting noise to the measured projections */
  noisy?: boolean;
  i0?: number;
  measuredStartDeg?: number;
  measuredEndDeg?: number;
}

export interface PairEntry {
  index: number;
  phantomSeed: number;
  noiseSeed: number | null;
  truth: string;
  fbp: string;
}

export interface Manifest {
  nPhantoms: number;
  seed: number;
  noisy: boolean;
  i0: number | null;
  measured: { startDeg: number; endDeg: number };
  normalization: Normalization;
  pairs: PairEntry[];
}

export interface TrainingPair {
  /** limited-angle FBP image, attenuation units */
  input: RawImage;
  /** ground-truth phantom, attenuation units */
  truth: RawImage;
  /** artifact image = input - truth, attenuation units */
  artifact: Float64Array;
}

export function buildDataset(opts: DatasetOptions): Manifest {
  if (opts.nPhantoms <= 0) throw new Error('nPhantoms must be positive');
  const startDeg = opts.measuredStartDeg ?? 30;
  const endDeg = opts.measuredEndDeg ?? 150;
  const i0 = opts.i0 ?? 1e5;
  mkdirSync(opts.outDir, { recursive: true });

  const pairs: PairEntry[] = [];
  for (let k = 0; k < opts.nPhantoms; k++) {
    const phantomSeed = opts.seed + k;
    const noiseSeed = opts.noisy ? opts.seed * 1000 + k : null;
    const truth = `truth_${k}.raw`;
    const sino = join(opts.outDir, `sino_${k}.raw`);
    const fbp = `fbp_${k}.raw`;

    runPrimary([
      'phantom',
      '--out', join(opts.outDir, truth),
      '--seed', String(phantomSeed),
    ]);
    runPrimary([
      'project',
      '--image', join(opts.outDir, truth),
      '--out', sino,
      '--measured-start', String(startDeg),
      '--measured-end', String(endDeg),
    ]);
    let fbpInput = sino;
    if (opts.noisy) {
      fbpInput = join(opts.outDir, `sino_noisy_${k}.raw`);
      runPrimary([
        'noise',
        '--sino', sino,
        '--out', fbpInput,
        '--i0', String(i0),
        '--seed', String(noiseSeed),
      ]);
    }
    runPrimary(['fbp', '--sino', fbpInput, '--out', join(opts.outDir, fbp)]);
    pairs.push({ index: k, phantomSeed, noiseSeed, truth, fbp });
  }

  const manifest: Manifest = {
    nPhantoms: opts.nPhantoms,
    seed: opts.seed,
    noisy: opts.noisy ?? false,
    i0: opts.noisy ? i0 : null,
    measured: { startDeg, endDeg },
    normalization: DEFAULT_NORMALIZATION,
    pairs,
  };
  writeFileSync(
    join(opts.outDir, 'dataset.json'),
    `${JSON.stringify(manifest, null, 2)}\n`
  );
  return manifest;
}

export function readManifest(dir: string): Manifest {
  return JSON.parse(readFileSync(join(dir, 'dataset.json'), 'utf8'));
}

export function loadPair(dir: string, entry: PairEntry): TrainingPair {
  const input = readImage(join(dir, entry.fbp));
  const truth = readImage(join(dir, entry.truth));
  if (input.nx !== truth.nx || input.ny !== truth.ny) {
    throw new Error(`pair ${entry.index}: input and truth shapes differ`);
  }
  const artifact = new Float64Array(input.values.length);
  for (let i = 0; i < artifact.length; i++) {
    artifact[i] = input.values[i] - truth.values[i];
  }
  return { input, truth, artifact };
}

export function loadPairs(dir: string, manifest: Manifest): TrainingPair[] {
  return manifest.pairs.map((entry) => loadPair(dir, entry));
}

const HU_PER_MU = (norm: Normalization) => 1000 / norm.muWater;

/** Map an attenuation image onto [0, 1] over the configured HU range. */
export function normalizeInput(mu: Float64Array, norm: Normalization): Float32Array {
  const span = norm.hiHu - norm.loHu;
  const out = new Float32Array(mu.length);
  for (let i = 0; i < mu.length; i++) {
    const hu = (mu[i] - norm.muWater) * HU_PER_MU(norm);
    out[i] = (hu - norm.loHu) / span;
  }
  return out;
}

/**
 * Scale an artifact (attenuation difference) by the same HU span. Artifact
 * values are differences, so only the span applies: a zero artifact maps to
 * exactly zero, and back.
 */
export function normalizeTarget(artifactMu: Float64Array, norm: Normalization): Float32Array {
  const span = norm.hiHu - norm.loHu;
  const out = new Float32Array(artifactMu.length);
  for (let i = 0; i < artifactMu.length; i++) {
    out[i] = (artifactMu[i] * HU_PER_MU(norm)) / span;
  }
  return out;
}

/** Invert {@link normalizeTarget}: network output back to attenuation. */
export function denormalizeTarget(pred: Float32Array | Float64Array, norm: Normalization): Float64Array {
  const span = norm.hiHu - norm.loHu;
  const out = new Float64Array(pred.length);
  for (let i = 0; i < pred.length; i++) {
    out[i] = (pred[i] * span) / HU_PER_MU(norm);
  }
  return out;
}
