import { execFileSync } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { beforeAll, describe, expect, it } from "vitest";

import { initBackend } from "../src/backend.js";
import { generateKeyphrases } from "../src/beam.js";
import { writePredictionsJsonl } from "../src/io.js";
import { train } from "../src/train.js";
import { sourceTokens } from "../src/vocab.js";
import { TEST_CONFIG, toyDocs } from "./helpers.js";

beforeAll(async () => {
  await initBackend();
});

describe("predictions exchange format", () => {
  it("generated JSONL loads through the retrieval package's loader", () => {
    const docs = toyDocs().slice(0, 6);
    const { model, vocab } = train(docs, { ...TEST_CONFIG, learningRate: 0.02 },
                                   { epochs: 40 });
    const rows = docs.map((doc) => ({
      id: doc.id,
      keyphrases: generateKeyphrases(
        model, vocab, sourceTokens(doc, TEST_CONFIG.maxSourceLen), 5,
        { beamSize: 5 },
      ),
    }));
    const dir = fs.mkdtempSync(path.join(os.tmpdir(), "kpgen-"));
    const out = path.join(dir, "preds.jsonl");
    writePredictionsJsonl(out, rows);

    const code = [
      "import json, sys",
      "from kpsearch.corpus import load_predictions",
      "preds = load_predictions(sys.argv[1])",
      "print(json.dumps({doc_id: list(phrases) for doc_id, phrases in preds.by_doc.items()}))",
    ].join("\n");
    const loaded = JSON.parse(
      execFileSync("python3", ["-c", code, out], { encoding: "utf-8" }),
    ) as Record<string, string[]>;
    expect(Object.keys(loaded)).toEqual(rows.map((row) => row.id));
    for (const row of rows) {
      expect(loaded[row.id]).toEqual(row.keyphrases);
    }
  }, 240_000);
});
