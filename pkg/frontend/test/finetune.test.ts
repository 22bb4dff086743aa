import * as fs from "fs";
import * as os from "os";
import * as path from "path";
import { describe, expect, it } from "vitest";

import {
  DEFAULT_CONFIG,
  EarlyStopping,
  Seq2SeqModel,
  Vocab,
  cosineLearningRate,
  loadTrainingPairs,
} from "../src/seq2seq";

const TOY_PAIRS = Array.from({ length: 10 }, (_, i) => ({
  input: [
    "[<TESTCONTEXT>]",
    `public void t${i} ( ) {`,
    "[<BREAKAGE>]",
    `w . poke ( ${i} ) ;`,
    "[</BREAKAGE>]",
    "}",
    "[<REPAIRCONTEXT>]",
    "[<HUNK>] [<ADD>]",
    "public void poke ( int v , int extra ) { [</HUNK>]",
  ].join("\n"),
  expected_output: `w . poke ( ${i} , 0 ) ;`,
}));

const SMOKE_CONFIG = {
  ...DEFAULT_CONFIG,
  embeddingDim: 8,
  hiddenUnits: 12,
  maxInputLen: 48,
  maxOutputLen: 16,
  epochs: 2,
  learningRate: 1e-2,
};

describe("EarlyStopping", () => {
  it("stops when validation loss fails to decrease", () => {
    const stopper = new EarlyStopping();
    expect(stopper.record(0, 1.0)).toBe("continue");
    expect(stopper.record(1, 0.9)).toBe("continue");
    expect(stopper.record(2, 0.95)).toBe("stop");
    expect(stopper.bestEpoch).toBe(1);
    expect(stopper.bestLoss).toBeCloseTo(0.9);
  });

  it("keeps going while loss improves", () => {
    const stopper = new EarlyStopping();
    for (const [epoch, loss] of [[0, 3], [1, 2], [2, 1]] as const) {
      expect(stopper.record(epoch, loss)).toBe("continue");
    }
    expect(stopper.bestEpoch).toBe(2);
  });
});

describe("cosineLearningRate", () => {
  it("starts at the base rate and decays to zero", () => {
    expect(cosineLearningRate(1e-5, 0, 4)).toBeCloseTo(1e-5);
    expect(cosineLearningRate(1e-5, 3, 4)).toBeCloseTo(0);
  });

  it("paper-style defaults are wired in", () => {
    expect(DEFAULT_CONFIG.learningRate).toBe(1e-5);
    expect(DEFAULT_CONFIG.epochs).toBe(4);
  });
});

describe("fine-tuning smoke", () => {
  it("trains on a 10-pair corpus and produces a loadable checkpoint", async () => {
    const vocab = Vocab.build(TOY_PAIRS);
    const model = Seq2SeqModel.fresh(vocab, SMOKE_CONFIG);
    const losses = await model.finetune(TOY_PAIRS.slice(0, 8), TOY_PAIRS.slice(8));
    expect(losses.length).toBeGreaterThanOrEqual(1);

    const dir = fs.mkdtempSync(path.join(os.tmpdir(), "ckpt-"));
    const ckpt = path.join(dir, "model.json");
    await model.save(ckpt);
    expect(fs.existsSync(ckpt)).toBe(true);

    const restored = Seq2SeqModel.load(ckpt);
    const candidates = await restored.generate(TOY_PAIRS[0].input, 3, 12);
    expect(candidates).toHaveLength(3);
    for (let i = 1; i < candidates.length; i++) {
      expect(candidates[i].score).toBeLessThanOrEqual(candidates[i - 1].score);
    }
  }, 120_000);

  it("early stop selects the minimum-validation-loss epoch", async () => {
    // a large learning rate makes the val loss bounce, triggering the rule
    const config = { ...SMOKE_CONFIG, epochs: 6, learningRate: 0.5 };
    const model = Seq2SeqModel.fresh(Vocab.build(TOY_PAIRS), config);
    const seen: number[] = [];
    const losses = await model.finetune(
      TOY_PAIRS.slice(0, 8), TOY_PAIRS.slice(8),
      (_epoch, valLoss) => seen.push(valLoss)
    );
    expect(losses).toEqual(seen);
    if (losses.length < config.epochs) {
      // stopped early: the last loss failed to improve on the best
      const best = Math.min(...losses.slice(0, -1));
      expect(losses[losses.length - 1]).toBeGreaterThanOrEqual(best);
    }
  }, 120_000);
});

describe("loadTrainingPairs", () => {
  it("reads prompts JSONL rows", () => {
    const dir = fs.mkdtempSync(path.join(os.tmpdir(), "prompts-"));
    const file = path.join(dir, "train.jsonl");
    fs.writeFileSync(
      file,
      TOY_PAIRS.map((p) => JSON.stringify({ id: "x", ...p })).join("\n")
    );
    expect(loadTrainingPairs(file)).toHaveLength(10);
  });

  it("rejects rows without the required fields", () => {
    const dir = fs.mkdtempSync(path.join(os.tmpdir(), "prompts-"));
    const file = path.join(dir, "bad.jsonl");
    fs.writeFileSync(file, JSON.stringify({ id: "x" }));
    expect(() => loadTrainingPairs(file)).toThrow();
  });
});
