import * as path from "node:path";
import * as url from "node:url";

import { GenConfig, TOY_CONFIG } from "../src/model.js";
import { CorpusDoc } from "../src/vocab.js";
import { readCorpusJsonl } from "../src/io.js";

const HERE = path.dirname(url.fileURLToPath(import.meta.url));
export const FIXTURES = path.join(HERE, "..", "fixtures");
export const REPO_ROOT = path.join(HERE, "..", "..");

/** Small dimensions so a full train+generate cycle stays in seconds. */
export const TEST_CONFIG: GenConfig = {
  ...TOY_CONFIG,
  embeddingDim: 24,
  hiddenSize: 32,
  maxSourceLen: 24,
  dropout: 0,
  learningRate: 0.005,
  seed: 3,
};

export function toyDocs(): CorpusDoc[] {
  return readCorpusJsonl(path.join(FIXTURES, "toy_corpus.jsonl"));
}

export function copyDocs(): CorpusDoc[] {
  return readCorpusJsonl(path.join(FIXTURES, "copy_fixture.jsonl"));
}
