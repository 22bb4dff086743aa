/**
 * Command: start the generation service.
 *
 *   node dist/serve.js --echo --port 8900
 *   node dist/serve.js --checkpoint ckpt.json --port 8900 --record fixtures/run.jsonl
 */

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { EchoModel, GenerationModel } from "./model";
import { Seq2SeqModel } from "./seq2seq";
import { createApp } from "./server";

async function main(): Promise<void> {
  const argv = await yargs(hideBin(process.argv))
    .option("port", { type: "number", default: 8900 })
    .option("echo", {
      type: "boolean", default: false,
      describe: "serve the deterministic echo model (no weights needed)",
    })
    .option("checkpoint", {
      type: "string", describe: "checkpoint JSON produced by finetune",
    })
    .option("record", {
      type: "string", describe: "append request/response pairs to this JSONL file",
    })
    .option("max-input-tokens", { type: "number", default: 512 })
    .option("max-output-tokens", { type: "number", default: 256 })
    .strict()
    .parse();

  let model: GenerationModel;
  if (argv.echo) {
    model = new EchoModel();
  } else if (argv.checkpoint) {
    model = Seq2SeqModel.load(argv.checkpoint);
  } else {
    console.error("need --echo or --checkpoint <path>");
    process.exit(2);
  }

  const app = createApp(model, {
    maxInputTokens: argv["max-input-tokens"],
    maxOutputTokens: argv["max-output-tokens"],
    recordPath: argv.record,
  });
  app.listen(argv.port, () => {
    console.log(`generation service listening on :${argv.port}`);
  });
}

main().catch((err) => {
  console.error(err);
  process.exit(1);
});
