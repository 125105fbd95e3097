/**
 * Raw image file format shared with the reconstruction CLI: little-endian
 * float32 pixels, row-major, with a JSON sidecar `<name>.json` describing
 * the grid. This module implements the documented contract so the trainer
 * can read FBP inputs and write priors the CLI accepts.
 */

import { readFileSync, writeFileSync } from 'node:fs';
import { spawnSync } from 'node:child_process';

export const MU_UNIT = 'mm^-1';
export const HU_UNIT = 'HU';

export interface RawImage {
  nx: number;
  ny: number;
  dxMm: number;
  dyMm: number;
  unit: string;
  /** row-major (ny rows of nx), float64 in memory */
  values: Float64Array;
}

export function sidecarPath(rawPath: string): string {
  return `${rawPath}.json`;
}

export function readImage(rawPath: string): RawImage {
  const meta = JSON.parse(readFileSync(sidecarPath(rawPath), 'utf8'));
  const nx = Number(meta.nx);
  const ny = Number(meta.ny);
  if (!Number.isInteger(nx) || !Number.isInteger(ny) || nx <= 0 || ny <= 0) {
    throw new Error(`invalid grid shape in sidecar ${sidecarPath(rawPath)}`);
  }
  const buf = readFileSync(rawPath);
  if (buf.byteLength !== nx * ny * 4) {
    throw new Error(
      `raw file ${rawPath} holds ${buf.byteLength} bytes, expected ${nx * ny * 4}`
    );
  }
  const f32 = new Float32Array(buf.buffer, buf.byteOffset, nx * ny);
  const values = new Float64Array(nx * ny);
  for (let i = 0; i < f32.length; i++) values[i] = f32[i];
  return {
    nx,
    ny,
    dxMm: Number(meta.dx_mm),
    dyMm: Number(meta.dy_mm),
    unit: String(meta.unit ?? MU_UNIT),
    values,
  };
}

export function writeImage(rawPath: string, image: RawImage): void {
  const f32 = new Float32Array(image.values.length);
  for (let i = 0; i < f32.length; i++) {
    const v = image.values[i];
    if (!Number.isFinite(v)) {
      throw new Error(`non-finite pixel at index ${i} in ${rawPath}`);
    }
    f32[i] = v;
  }
  writeFileSync(rawPath, Buffer.from(f32.buffer));
  const meta = {
    nx: image.nx,
    ny: image.ny,
    dx_mm: image.dxMm,
    dy_mm: image.dyMm,
    unit: image.unit,
  };
  writeFileSync(sidecarPath(rawPath), `${JSON.stringify(meta, null, 2)}\n`);
}

/** Resolve the reconstruction CLI binary (override with DCARCT_BIN). */
export function primaryBin(): string {
  return process.env.DCARCT_BIN ?? 'dcarct';
}

/** Run one reconstruction-CLI subcommand, surfacing failures verbatim. */
export function runPrimary(args: string[]): string {
  const res = spawnSync(primaryBin(), args, { encoding: 'utf8' });
  if (res.error) {
    throw new Error(`failed to launch ${primaryBin()}: ${res.error.message}`);
  }
  if (res.status !== 0) {
    throw new Error(
      `${primaryBin()} ${args.join(' ')} exited with ${res.status}:\n` +
        `${res.stdout}${res.stderr}`
    );
  }
  return res.stdout;
}
