/**
 * kpgen train|generate|eval
 *
 * train:    --corpus c.jsonl --out model.json [--epochs 50] [--toy]
 *           [--vocab-size N] [--embedding-dim N] [--hidden-size N]
 *           [--encoder-layers N] [--lr F] [--dropout F] [--clip F]
 *           [--beam-depth N] [--beam-size N] [--max-source-len N] [--seed N]
 * generate: --model model.json --corpus c.jsonl --out preds.jsonl
 *           [--k 5] [--beam-size N] [--beam-depth N]
 * eval:     --predictions p.jsonl --corpus c.jsonl [--k 5]
 *
 * Exit codes: 0 success, 1 usage error, 2 data/model error.
 */

import * as fs from "node:fs";

import { initBackend } from "./backend.js";
import { DEFAULT_CONFIG, GenConfig, TOY_CONFIG } from "./model.js";
import { generateKeyphrases } from "./beam.js";
import { evaluatePredictions } from "./evaluate.js";
import { readCorpusJsonl, writePredictionsJsonl } from "./io.js";
import { loadCheckpoint, saveCheckpoint, train } from "./train.js";
import { sourceTokens } from "./vocab.js";

class UsageError extends Error {}

function parseFlags(argv: string[]): Map<string, string> {
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    if (!key.startsWith("--")) throw new UsageError(`unexpected argument ${key}`);
    if (key === "--toy") {
      flags.set("toy", "1");
      i -= 1;
      continue;
    }
    const value = argv[i + 1];
    if (value === undefined) throw new UsageError(`flag ${key} needs a value`);
    flags.set(key.slice(2), value);
  }
  return flags;
}

function need(flags: Map<string, string>, key: string): string {
  const value = flags.get(key);
  if (value === undefined) throw new UsageError(`--${key} is required`);
  return value;
}

function numberFlag(flags: Map<string, string>, key: string): number | undefined {
  const raw = flags.get(key);
  if (raw === undefined) return undefined;
  const value = Number(raw);
  if (!Number.isFinite(value)) throw new UsageError(`--${key} must be a number`);
  return value;
}

function configFromFlags(flags: Map<string, string>): GenConfig {
  const base = flags.has("toy") ? TOY_CONFIG : DEFAULT_CONFIG;
  return {
    ...base,
    vocabSize: numberFlag(flags, "vocab-size") ?? base.vocabSize,
    embeddingDim: numberFlag(flags, "embedding-dim") ?? base.embeddingDim,
    hiddenSize: numberFlag(flags, "hidden-size") ?? base.hiddenSize,
    encoderLayers: numberFlag(flags, "encoder-layers") ?? base.encoderLayers,
    learningRate: numberFlag(flags, "lr") ?? base.learningRate,
    gradientClipNorm: numberFlag(flags, "clip") ?? base.gradientClipNorm,
    dropout: numberFlag(flags, "dropout") ?? base.dropout,
    beamDepth: numberFlag(flags, "beam-depth") ?? base.beamDepth,
    beamSize: numberFlag(flags, "beam-size") ?? base.beamSize,
    maxSourceLen: numberFlag(flags, "max-source-len") ?? base.maxSourceLen,
    seed: numberFlag(flags, "seed") ?? base.seed,
  };
}

function cmdTrain(flags: Map<string, string>): number {
  const docs = readCorpusJsonl(need(flags, "corpus"));
  const config = configFromFlags(flags);
  const epochs = numberFlag(flags, "epochs") ?? 50;
  const out = need(flags, "out");
  const result = train(docs, config, {
    epochs,
    onEpoch: (epoch, loss) => {
      if (epoch % 10 === 0 || epoch === epochs - 1) {
        console.log(`epoch ${epoch} loss ${loss.toFixed(4)}`);
      }
    },
  });
  saveCheckpoint(out, result.model, result.vocab, result.lossCurve);
  console.log(`saved checkpoint to ${out} (final loss ${result.lossCurve.at(-1)!.toFixed(4)})`);
  return 0;
}

function cmdGenerate(flags: Map<string, string>): number {
  const { model, vocab } = loadCheckpoint(need(flags, "model"));
  const docs = readCorpusJsonl(need(flags, "corpus"));
  const k = numberFlag(flags, "k") ?? 5;
  const options = {
    beamSize: numberFlag(flags, "beam-size"),
    beamDepth: numberFlag(flags, "beam-depth"),
  };
  const rows = docs.map((doc) => ({
    id: doc.id,
    keyphrases: generateKeyphrases(
      model, vocab, sourceTokens(doc, model.config.maxSourceLen), k, options,
    ),
  }));
  writePredictionsJsonl(need(flags, "out"), rows);
  console.log(`wrote predictions for ${rows.length} documents`);
  return 0;
}

function cmdEval(flags: Map<string, string>): number {
  const docs = readCorpusJsonl(need(flags, "corpus"));
  const k = numberFlag(flags, "k") ?? 5;
  const predictions = new Map<string, string[]>();
  const lines = fs.readFileSync(need(flags, "predictions"), "utf-8").split("\n");
  for (const line of lines) {
    if (!line.trim()) continue;
    const record = JSON.parse(line) as { id: string; keyphrases: string[] };
    predictions.set(record.id, record.keyphrases);
  }
  const gold = new Map(docs.map((doc) => [doc.id, doc.keywords]));
  const summary = evaluatePredictions(predictions, gold, k);
  console.log(`F1@${k} ${summary.meanF1.toFixed(4)} over ${summary.perDoc.length} documents`);
  return 0;
}

export async function main(argv: string[]): Promise<number> {
  try {
    const [command, ...rest] = argv;
    const flags = parseFlags(rest);
    if (command === "eval") return cmdEval(flags); // no tensor work involved
    await initBackend();
    if (command === "train") return cmdTrain(flags);
    if (command === "generate") return cmdGenerate(flags);
    throw new UsageError(`unknown command ${command ?? "(none)"}; use train|generate|eval`);
  } catch (error) {
    if (error instanceof UsageError) {
      console.error(`kpgen: ${error.message}`);
      return 1;
    }
    console.error(`kpgen: ${(error as Error).message}`);
    return 2;
  }
}

if (process.argv[1] && process.argv[1].endsWith("cli.js")) {
  main(process.argv.slice(2)).then((code) => process.exit(code));
}
