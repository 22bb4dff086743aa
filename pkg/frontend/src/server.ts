/**
 * HTTP generation service.
 *
 * Wire contract (shared with the repair client):
 *   POST /generate  {"input": string, "beam_size": int, "max_new_tokens": int}
 *                   -> {"candidates": [{"text": string, "score": number}]}
 *                   with scores descending and exactly beam_size entries.
 *   GET  /health    -> 200
 *
 * Overlong inputs get a 422 carrying the offending token counts. With a
 * record directory configured, every request/response pair is appended as
 * JSONL, replayable by the client's fixture backend.
 */

import * as fs from "fs";
import * as path from "path";
import express, { Express } from "express";

import { GenerationModel, normalizeCandidates } from "./model";
import { countTokens } from "./tokenizer";

export interface ServerOptions {
  maxInputTokens?: number;
  maxOutputTokens?: number;
  recordPath?: string;
}

export function createApp(model: GenerationModel, options: ServerOptions = {}): Express {
  const maxInputTokens = options.maxInputTokens ?? 512;
  const maxOutputTokens = options.maxOutputTokens ?? 256;
  if (options.recordPath) {
    fs.mkdirSync(path.dirname(path.resolve(options.recordPath)), { recursive: true });
  }

  const app = express();
  app.use(express.json({ limit: "5mb" }));

  app.get("/health", (_req, res) => {
    res.status(200).json({ status: "ok" });
  });

  app.post("/generate", async (req, res) => {
    const { input, beam_size: beamSize, max_new_tokens: maxNewTokens } = req.body ?? {};
    if (typeof input !== "string" || !Number.isInteger(beamSize) || beamSize < 1) {
      res.status(400).json({ error: "need input: string and beam_size: int >= 1" });
      return;
    }
    const tokenCount = countTokens(input);
    if (tokenCount > maxInputTokens) {
      res.status(422).json({
        error: "input exceeds the model's token budget",
        token_count: tokenCount,
        max_input_tokens: maxInputTokens,
      });
      return;
    }
    const newTokens = Number.isInteger(maxNewTokens)
      ? Math.min(maxNewTokens, maxOutputTokens)
      : maxOutputTokens;
    try {
      const raw = await model.generate(input, beamSize, newTokens);
      const candidates = normalizeCandidates(raw, beamSize);
      const response = { candidates };
      if (options.recordPath) {
        fs.appendFileSync(
          options.recordPath,
          JSON.stringify({
            request: { input, beam_size: beamSize, max_new_tokens: newTokens },
            response,
          }) + "\n"
        );
      }
      res.status(200).json(response);
    } catch (err) {
      res.status(500).json({ error: String(err) });
    }
  });

  return app;
}
