/**
 * Toy fine-tunable encoder-decoder over the repair prompt format.
 *
 * A small LSTM seq2seq trained with teacher forcing on (input,
 * expected_output) pairs. Decoding is beam search; for simplicity each step
 * re-runs the full decoder on the partial output (fine at toy scale).
 * Checkpoints are plain JSON (vocab + config + weights) so no native
 * TensorFlow binding is needed.
 */

import * as fs from "fs";
import * as path from "path";
import * as tf from "@tensorflow/tfjs";

import { Candidate, GenerationModel, normalizeCandidates } from "./model";
import { inputTokens, tokenize } from "./tokenizer";

export interface Seq2SeqConfig {
  embeddingDim: number;
  hiddenUnits: number;
  maxInputLen: number;
  maxOutputLen: number;
  learningRate: number;
  epochs: number;
}

export const DEFAULT_CONFIG: Seq2SeqConfig = {
  embeddingDim: 16,
  hiddenUnits: 32,
  maxInputLen: 128,
  maxOutputLen: 48,
  learningRate: 1e-5,
  epochs: 4,
};

export interface TrainingPair {
  input: string;
  expected_output: string;
}

const PAD = 0;
const UNK = 1;
const BOS = 2;
const EOS = 3;
const RESERVED = ["<pad>", "<unk>", "<bos>", "<eos>"];

export class Vocab {
  readonly tokens: string[];
  private index: Map<string, number>;

  constructor(tokens: string[]) {
    this.tokens = tokens;
    this.index = new Map(tokens.map((t, i) => [t, i]));
  }

  static build(pairs: TrainingPair[]): Vocab {
    const seen = new Set<string>();
    for (const pair of pairs) {
      for (const tok of inputTokens(pair.input)) seen.add(tok);
      for (const tok of inputTokens(pair.expected_output)) seen.add(tok);
    }
    return new Vocab([...RESERVED, ...[...seen].sort()]);
  }

  get size(): number {
    return this.tokens.length;
  }

  encode(tokens: string[]): number[] {
    return tokens.map((t) => this.index.get(t) ?? UNK);
  }

  decode(ids: number[]): string[] {
    return ids
      .filter((id) => id > EOS)
      .map((id) => this.tokens[id] ?? "<unk>");
  }
}

function padTo(ids: number[], length: number): number[] {
  const out = ids.slice(0, length);
  while (out.length < length) out.push(PAD);
  return out;
}

/**
 * Early-stopping policy: stop as soon as validation loss fails to decrease
 * relative to the best epoch so far (patience of one epoch); the checkpoint
 * is always the epoch with the smallest validation loss.
 */
export class EarlyStopping {
  bestLoss = Number.POSITIVE_INFINITY;
  bestEpoch = -1;

  record(epoch: number, valLoss: number): "continue" | "stop" {
    if (valLoss < this.bestLoss) {
      this.bestLoss = valLoss;
      this.bestEpoch = epoch;
      return "continue";
    }
    return "stop";
  }
}

/** Cosine schedule over the planned epoch count. */
export function cosineLearningRate(base: number, epoch: number, total: number): number {
  if (total <= 1) return base;
  return base * 0.5 * (1 + Math.cos((Math.PI * epoch) / (total - 1)));
}

interface BuiltModel {
  training: tf.LayersModel;
  encoder: tf.LayersModel;
}

function buildModel(vocabSize: number, config: Seq2SeqConfig): BuiltModel {
  const encIn = tf.input({ shape: [config.maxInputLen], name: "encoder_tokens" });
  const decIn = tf.input({ shape: [config.maxOutputLen], name: "decoder_tokens" });
  const encEmbed = tf.layers.embedding({
    inputDim: vocabSize, outputDim: config.embeddingDim, name: "encoder_embedding",
  });
  const decEmbed = tf.layers.embedding({
    inputDim: vocabSize, outputDim: config.embeddingDim, name: "decoder_embedding",
  });
  const encLstm = tf.layers.lstm({
    units: config.hiddenUnits, returnState: true, name: "encoder_lstm",
  });
  const decLstm = tf.layers.lstm({
    units: config.hiddenUnits, returnSequences: true, name: "decoder_lstm",
  });
  const project = tf.layers.dense({
    units: vocabSize, activation: "softmax", name: "vocab_projection",
  });

  const encSeq = encEmbed.apply(encIn) as tf.SymbolicTensor;
  const [, encH, encC] = encLstm.apply(encSeq) as tf.SymbolicTensor[];
  const decSeq = decEmbed.apply(decIn) as tf.SymbolicTensor;
  const decOut = decLstm.apply(decSeq, {
    initialState: [encH, encC],
  }) as tf.SymbolicTensor;
  const probs = project.apply(decOut) as tf.SymbolicTensor;

  const training = tf.model({ inputs: [encIn, decIn], outputs: probs });
  const encoder = tf.model({ inputs: encIn, outputs: [encH, encC] });
  return { training, encoder };
}

export class Seq2SeqModel implements GenerationModel {
  constructor(
    readonly vocab: Vocab,
    readonly config: Seq2SeqConfig,
    private built: BuiltModel
  ) {}

  static fresh(vocab: Vocab, config: Seq2SeqConfig): Seq2SeqModel {
    return new Seq2SeqModel(vocab, config, buildModel(vocab.size, config));
  }

  private tensorize(pairs: TrainingPair[]): {
    encX: tf.Tensor2D; decX: tf.Tensor2D; target: tf.Tensor3D;
  } {
    const enc: number[][] = [];
    const dec: number[][] = [];
    const tgt: number[][] = [];
    for (const pair of pairs) {
      const input = this.vocab.encode(inputTokens(pair.input));
      const output = this.vocab.encode(inputTokens(pair.expected_output));
      enc.push(padTo(input, this.config.maxInputLen));
      dec.push(padTo([BOS, ...output], this.config.maxOutputLen));
      tgt.push(padTo([...output, EOS], this.config.maxOutputLen));
    }
    return {
      encX: tf.tensor2d(enc),
      decX: tf.tensor2d(dec),
      target: tf.tensor3d(tgt.map((row) => row.map((v) => [v]))),
    };
  }

  /**
   * Teacher-forced fine-tuning with a cosine learning-rate schedule and
   * early stopping on validation loss. Returns the per-epoch val losses.
   */
  async finetune(
    train: TrainingPair[],
    val: TrainingPair[],
    onEpoch?: (epoch: number, valLoss: number) => void
  ): Promise<number[]> {
    if (train.length === 0) {
      throw new Error("training set is empty");
    }
    const trainT = this.tensorize(train);
    const valT = this.tensorize(val.length ? val : train);
    const stopper = new EarlyStopping();
    const losses: number[] = [];
    let bestWeights: tf.Tensor[] | null = null;
    try {
      for (let epoch = 0; epoch < this.config.epochs; epoch++) {
        const lr = cosineLearningRate(
          this.config.learningRate, epoch, this.config.epochs
        );
        this.built.training.compile({
          optimizer: tf.train.adam(lr),
          loss: "sparseCategoricalCrossentropy",
        });
        await this.built.training.fit([trainT.encX, trainT.decX], trainT.target, {
          epochs: 1, verbose: 0, batchSize: Math.min(8, train.length),
        });
        const evalOut = this.built.training.evaluate(
          [valT.encX, valT.decX], valT.target, { batchSize: Math.min(8, val.length || train.length) }
        ) as tf.Scalar;
        const valLoss = (await evalOut.data())[0];
        evalOut.dispose();
        losses.push(valLoss);
        onEpoch?.(epoch, valLoss);
        const decision = stopper.record(epoch, valLoss);
        if (decision === "continue") {
          bestWeights?.forEach((w) => w.dispose());
          bestWeights = this.built.training.getWeights().map((w) => w.clone());
        }
        if (decision === "stop") break;
      }
      if (bestWeights) {
        this.built.training.setWeights(bestWeights);
      }
    } finally {
      trainT.encX.dispose(); trainT.decX.dispose(); trainT.target.dispose();
      valT.encX.dispose(); valT.decX.dispose(); valT.target.dispose();
      bestWeights?.forEach((w) => w.dispose());
    }
    return losses;
  }

  async generate(
    input: string,
    beamSize: number,
    maxNewTokens: number
  ): Promise<Candidate[]> {
    const steps = Math.min(maxNewTokens, this.config.maxOutputLen - 1);
    const encIds = padTo(
      this.vocab.encode(inputTokens(input)), this.config.maxInputLen
    );
    interface Beam { ids: number[]; logp: number; done: boolean }
    let beams: Beam[] = [{ ids: [BOS], logp: 0, done: false }];

    for (let step = 0; step < steps; step++) {
      const active = beams.filter((b) => !b.done);
      if (active.length === 0) break;
      const probs = tf.tidy(() => {
        const encX = tf.tensor2d(active.map(() => encIds));
        const decX = tf.tensor2d(
          active.map((b) => padTo(b.ids, this.config.maxOutputLen))
        );
        return this.built.training.predict([encX, decX]) as tf.Tensor3D;
      });
      const probsData = (await probs.array()) as number[][][];
      probs.dispose();

      const expanded: Beam[] = beams.filter((b) => b.done);
      active.forEach((beam, i) => {
        const stepProbs = probsData[i][beam.ids.length - 1];
        const ranked = stepProbs
          .map((p, id) => ({ id, p }))
          .filter(({ id }) => id !== PAD && id !== BOS)
          .sort((a, b) => b.p - a.p)
          .slice(0, beamSize + 1);
        for (const { id, p } of ranked) {
          expanded.push({
            ids: id === EOS ? beam.ids : [...beam.ids, id],
            logp: beam.logp + Math.log(Math.max(p, 1e-12)),
            done: id === EOS || beam.ids.length + 1 >= this.config.maxOutputLen,
          });
        }
      });
      expanded.sort((a, b) => b.logp - a.logp);
      beams = expanded.slice(0, beamSize);
    }

    const candidates = beams.map((beam) => ({
      text: this.vocab.decode(beam.ids).join(" "),
      score: beam.logp,
    }));
    return normalizeCandidates(candidates, beamSize);
  }

  // ----------------------------------------------------------------------
  // Checkpoints: plain JSON with config, vocab, and raw weight values.
  // ----------------------------------------------------------------------

  async save(checkpointPath: string): Promise<void> {
    const weights = this.built.training.getWeights();
    const payload = {
      format_version: 1,
      config: this.config,
      vocab: this.vocab.tokens,
      weights: await Promise.all(
        weights.map(async (w) => ({
          shape: w.shape,
          values: Array.from(await w.data()),
        }))
      ),
    };
    fs.mkdirSync(path.dirname(path.resolve(checkpointPath)), { recursive: true });
    fs.writeFileSync(checkpointPath, JSON.stringify(payload));
  }

  static load(checkpointPath: string): Seq2SeqModel {
    const payload = JSON.parse(fs.readFileSync(checkpointPath, "utf-8"));
    if (payload.format_version !== 1) {
      throw new Error(`unsupported checkpoint version ${payload.format_version}`);
    }
    const vocab = new Vocab(payload.vocab);
    const config = payload.config as Seq2SeqConfig;
    const built = buildModel(vocab.size, config);
    built.training.setWeights(
      payload.weights.map((w: { shape: number[]; values: number[] }) =>
        tf.tensor(w.values, w.shape)
      )
    );
    return new Seq2SeqModel(vocab, config, built);
  }
}

export function loadTrainingPairs(promptsPath: string): TrainingPair[] {
  const pairs: TrainingPair[] = [];
  for (const line of fs.readFileSync(promptsPath, "utf-8").split("\n")) {
    const trimmed = line.trim();
    if (!trimmed) continue;
    const row = JSON.parse(trimmed);
    if (typeof row.input !== "string" || typeof row.expected_output !== "string") {
      throw new Error("prompts rows need input and expected_output strings");
    }
    pairs.push({ input: row.input, expected_output: row.expected_output });
  }
  return pairs;
}
