import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { beforeAll, describe, expect, it } from "vitest";

import { initBackend } from "../src/backend.js";
import { loadCheckpoint, saveCheckpoint, train } from "../src/train.js";
import { generateKeyphrases } from "../src/beam.js";
import { sourceTokens } from "../src/vocab.js";
import { TEST_CONFIG, toyDocs } from "./helpers.js";

beforeAll(async () => {
  await initBackend();
});

describe("training on the 100-pair fixture", () => {
  it("loss strictly decreases over 50 epochs", () => {
    const docs = toyDocs();
    expect(docs).toHaveLength(100);
    const { lossCurve } = train(docs, TEST_CONFIG, { epochs: 50 });
    expect(lossCurve).toHaveLength(50);
    for (let epoch = 1; epoch < lossCurve.length; epoch++) {
      expect(lossCurve[epoch], `epoch ${epoch}`).toBeLessThan(lossCurve[epoch - 1]);
    }
  }, 120_000);

  it("fixed seed reproduces the loss curve exactly", () => {
    const docs = toyDocs().slice(0, 12);
    const config = { ...TEST_CONFIG, learningRate: 0.01 };
    const first = train(docs, config, { epochs: 5 }).lossCurve;
    const second = train(docs, config, { epochs: 5 }).lossCurve;
    expect(second).toEqual(first);
  }, 120_000);

  it("dropout training still reports a finite smooth eval curve", () => {
    const docs = toyDocs().slice(0, 12);
    const config = { ...TEST_CONFIG, dropout: 0.3, learningRate: 0.01 };
    const { lossCurve } = train(docs, config, { epochs: 3 });
    for (const loss of lossCurve) expect(Number.isFinite(loss)).toBe(true);
  }, 120_000);
});

describe("checkpointing", () => {
  it("round-trips weights, config and vocabulary", () => {
    const docs = toyDocs().slice(0, 10);
    const result = train(docs, { ...TEST_CONFIG, learningRate: 0.02 }, { epochs: 8 });
    const dir = fs.mkdtempSync(path.join(os.tmpdir(), "kpgen-"));
    const checkpoint = path.join(dir, "model.json");
    saveCheckpoint(checkpoint, result.model, result.vocab, result.lossCurve);
    expect(fs.existsSync(path.join(dir, "model.loss.csv"))).toBe(true);

    const restored = loadCheckpoint(checkpoint);
    expect(restored.vocab.idToToken).toEqual(result.vocab.idToToken);
    const doc = docs[0];
    const tokens = sourceTokens(doc, TEST_CONFIG.maxSourceLen);
    const fromLive = generateKeyphrases(result.model, result.vocab, tokens, 5,
                                        { beamSize: 5 });
    const fromDisk = generateKeyphrases(restored.model, restored.vocab, tokens, 5,
                                        { beamSize: 5 });
    expect(fromDisk).toEqual(fromLive);
  }, 120_000);

  it("rejects files that are not checkpoints", () => {
    const dir = fs.mkdtempSync(path.join(os.tmpdir(), "kpgen-"));
    const bogus = path.join(dir, "bogus.json");
    fs.writeFileSync(bogus, JSON.stringify({ format: "other" }));
    expect(() => loadCheckpoint(bogus)).toThrow(/not a kpgen checkpoint/);
  });
});
