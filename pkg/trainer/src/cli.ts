/**
 * Command-line entry: build-dataset / train / export-prior.
 */

import yargs from 'yargs';
import { hideBin } from 'yargs/helpers';

import { buildDataset, readManifest } from './dataset.js';
import { exportPrior } from './export.js';
import { train } from './train.js';

async function run(): Promise<number> {
  const argv = await yargs(hideBin(process.argv))
    .command(
      'build-dataset',
      'generate phantoms, limited-angle FBP inputs, and artifact targets',
      (y) =>
        y
          .option('out', { type: 'string', demandOption: true })
          .option('n-phantoms', { type: 'number', default: 8 })
          .option('seed', { type: 'number', default: 1 })
          .option('noisy', { type: 'boolean', default: false })
          .option('i0', { type: 'number', default: 1e5 })
    )
    .command('train', 'fit the artifact network on a dataset', (y) =>
      y
        .option('dataset', { type: 'string', demandOption: true })
        .option('checkpoint', { type: 'string', demandOption: true })
        .option('epochs', { type: 'number', default: 50 })
        .option('lr', { type: 'number', default: 1e-3 })
        .option('lr-step-epochs', { type: 'number', default: 20 })
        .option('batch-size', { type: 'number', default: 2 })
    )
    .command('export-prior', 'write FBP minus predicted artifact', (y) =>
      y
        .option('checkpoint', { type: 'string', demandOption: true })
        .option('fbp', { type: 'string', demandOption: true })
        .option('out', { type: 'string', demandOption: true })
    )
    .demandCommand(1)
    .strict()
    .parse();

  const cmd = String(argv._[0]);
  if (cmd === 'build-dataset') {
    const manifest = buildDataset({
      nPhantoms: argv['n-phantoms'] as number,
      seed: argv.seed as number,
      outDir: argv.out as string,
      noisy: argv.noisy as boolean,
      i0: argv.i0 as number,
    });
    console.log(`dataset: ${manifest.nPhantoms} pairs in ${argv.out}`);
    return 0;
  }
  if (cmd === 'train') {
    const dir = argv.dataset as string;
    const result = await train(dir, readManifest(dir), argv.checkpoint as string, {
      epochs: argv.epochs as number,
      initialLr: argv.lr as number,
      lrStepEpochs: argv['lr-step-epochs'] as number,
      batchSize: argv['batch-size'] as number,
    });
    const first = result.losses[0];
    const last = result.losses[result.losses.length - 1];
    console.log(
      `trained ${result.losses.length} epochs: loss ${first.toExponential(3)} -> ${last.toExponential(3)}`
    );
    return 0;
  }
  if (cmd === 'export-prior') {
    await exportPrior(
      argv.checkpoint as string,
      argv.fbp as string,
      argv.out as string
    );
    console.log(`prior written to ${argv.out}`);
    return 0;
  }
  console.error(`unknown command ${cmd}`);
  return 2;
}

run().then(
  (code) => process.exit(code),
  (err) => {
    console.error(err instanceof Error ? err.message : err);
    process.exit(1);
  }
);
