/**
 * Command: fine-tune the toy seq2seq model on encoded prompt pairs.
 *
 *   node dist/finetune.js --train train.prompts.jsonl --val val.prompts.jsonl \
 *       --out checkpoint.json
 *
 * Defaults: 4 epochs, Adam at lr 1e-5 with a cosine schedule, early stop
 * when validation loss fails to decrease after an epoch; the checkpoint is
 * the epoch with the smallest validation loss.
 */

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import {
  DEFAULT_CONFIG,
  Seq2SeqModel,
  Vocab,
  loadTrainingPairs,
} from "./seq2seq";

async function main(): Promise<void> {
  const argv = await yargs(hideBin(process.argv))
    .option("train", { type: "string", demandOption: true })
    .option("val", { type: "string" })
    .option("out", { type: "string", demandOption: true })
    .option("epochs", { type: "number", default: DEFAULT_CONFIG.epochs })
    .option("lr", { type: "number", default: DEFAULT_CONFIG.learningRate })
    .option("embedding-dim", { type: "number", default: DEFAULT_CONFIG.embeddingDim })
    .option("hidden-units", { type: "number", default: DEFAULT_CONFIG.hiddenUnits })
    .strict()
    .parse();

  const train = loadTrainingPairs(argv.train);
  if (train.length === 0) {
    console.error(`no training pairs in ${argv.train}`);
    process.exit(2);
  }
  const val = argv.val ? loadTrainingPairs(argv.val) : [];
  const config = {
    ...DEFAULT_CONFIG,
    epochs: argv.epochs,
    learningRate: argv.lr,
    embeddingDim: argv["embedding-dim"],
    hiddenUnits: argv["hidden-units"],
  };
  const model = Seq2SeqModel.fresh(Vocab.build([...train, ...val]), config);
  const losses = await model.finetune(train, val, (epoch, valLoss) => {
    console.log(`epoch ${epoch}: val loss ${valLoss.toFixed(6)}`);
  });
  await model.save(argv.out);
  console.log(`checkpoint written to ${argv.out} (${losses.length} epoch(s) run)`);
}

main().catch((err) => {
  console.error(err);
  process.exit(1);
});
