import * as tf from "@tensorflow/tfjs";
import { beforeAll, describe, expect, it } from "vitest";

import { initBackend } from "../src/backend.js";
import { createModel, decodeStep, encode } from "../src/model.js";
import { train } from "../src/train.js";
import { prepareBatch, makePairs } from "../src/train.js";
import { BOS, buildVocab, encodeSource, sourceTokens } from "../src/vocab.js";
import { TEST_CONFIG, copyDocs, toyDocs } from "./helpers.js";

beforeAll(async () => {
  await initBackend();
});

function freshSetup(docCount = 20) {
  const docs = toyDocs().slice(0, docCount);
  const vocab = buildVocab(docs, TEST_CONFIG.vocabSize);
  const model = createModel({ ...TEST_CONFIG, vocabSize: vocab.idToToken.length });
  const pairs = makePairs(docs, vocab, TEST_CONFIG.maxSourceLen);
  const batch = prepareBatch(pairs, vocab);
  return { docs, vocab, model, batch };
}

describe("mixture distribution", () => {
  it("sums to 1 within 1e-6 at every decoding step", () => {
    const { model, batch } = freshSetup();
    const encoded = encode(model, batch, 0, 0);
    let state = encoded.state;
    const batchSize = batch.srcIds.shape[0];
    let prev = tf.fill([batchSize], BOS, "int32") as tf.Tensor1D;
    for (let step = 0; step < 6; step++) {
      const result = decodeStep(model, batch, encoded, prev, state, 0, 0);
      state = result.state;
      const sums = tf.sum(result.dist, 1).arraySync() as number[];
      for (const total of sums) expect(Math.abs(total - 1)).toBeLessThan(1e-6);
      prev = tf.argMax(result.dist, 1).cast("int32") as tf.Tensor1D;
      // extended-vocabulary ids cannot be embedded directly
      prev = tf.minimum(prev, tf.scalar(model.config.vocabSize - 1, "int32"))
        .cast("int32") as tf.Tensor1D;
    }
  });

  it("puts positive probability on source-OOV ids via the copy path", () => {
    const docs = copyDocs();
    // cap the vocabulary low enough that every rare marker is OOV
    const vocab = buildVocab(docs, 20);
    const model = createModel({ ...TEST_CONFIG, vocabSize: vocab.idToToken.length });
    const pairs = makePairs(docs, vocab, TEST_CONFIG.maxSourceLen);
    const batch = prepareBatch(pairs, vocab);
    expect(batch.extVocab).toBeGreaterThan(vocab.idToToken.length);
    const encoded = encode(model, batch, 0, 0);
    const result = decodeStep(
      model, batch, encoded,
      tf.fill([pairs.length], BOS, "int32") as tf.Tensor1D, encoded.state, 0, 0,
    );
    const dist = result.dist.arraySync() as number[][];
    pairs.forEach((pair, row) => {
      for (const extId of pair.source.extIds) {
        if (extId >= vocab.idToToken.length) {
          expect(dist[row][extId]).toBeGreaterThan(0);
        }
      }
    });
  });
});

describe("copy gate isolation", () => {
  it("closed gate assigns zero probability to every OOV id", () => {
    const docs = copyDocs();
    const vocab = buildVocab(docs, 20);
    const model = createModel({ ...TEST_CONFIG, vocabSize: vocab.idToToken.length });
    const pairs = makePairs(docs, vocab, TEST_CONFIG.maxSourceLen);
    const batch = prepareBatch(pairs, vocab);
    const encoded = encode(model, batch, 0, 0);
    const result = decodeStep(
      model, batch, encoded,
      tf.fill([pairs.length], BOS, "int32") as tf.Tensor1D, encoded.state,
      0, 0, 1, // pGen pinned to 1
    );
    const dist = result.dist.arraySync() as number[][];
    for (const row of dist) {
      for (let id = vocab.idToToken.length; id < batch.extVocab; id++) {
        expect(row[id]).toBe(0);
      }
    }
  });

  it("open gate on a single-token source emits that token", () => {
    const docs = copyDocs();
    const vocab = buildVocab(docs, 20);
    const model = createModel({ ...TEST_CONFIG, vocabSize: vocab.idToToken.length });
    const tokens = ["zyqtran"]; // single-token source, OOV by construction
    const source = encodeSource(tokens, vocab);
    const extVocab = vocab.idToToken.length + source.oov.length;
    const batch = {
      srcIds: tf.tensor2d([source.ids], undefined, "int32") as tf.Tensor2D,
      srcMask: tf.tensor2d([[1]]) as tf.Tensor2D,
      srcOneHot: tf.oneHot(tf.tensor2d([source.extIds], undefined, "int32"), extVocab)
        .cast("float32") as tf.Tensor3D,
      extVocab,
    };
    const encoded = encode(model, batch, 0, 0);
    const result = decodeStep(
      model, batch, encoded, tf.tensor1d([BOS], "int32"), encoded.state,
      0, 0, 0, // pGen pinned to 0: copy only
    );
    const dist = (result.dist.arraySync() as number[][])[0];
    const best = dist.indexOf(Math.max(...dist));
    expect(best).toBe(vocab.idToToken.length); // the one OOV slot
    expect(dist[best]).toBeCloseTo(1.0, 6);
  });
});

describe("loss", () => {
  it("aborts on non-finite loss rather than continuing", () => {
    const docs = toyDocs().slice(0, 5);
    const vocab = buildVocab(docs, TEST_CONFIG.vocabSize);
    const model = createModel({ ...TEST_CONFIG, vocabSize: vocab.idToToken.length });
    // a poisoned weight (resumed from a corrupt checkpoint) must abort
    model.params.outB.assign(
      tf.fill(model.params.outB.shape as [number], NaN),
    );
    expect(() =>
      train(docs, TEST_CONFIG, { epochs: 2, resumeFrom: { model, vocab } }),
    ).toThrow(/non-finite/);
  });

  it("resume continues from the given parameters", () => {
    const docs = toyDocs().slice(0, 5);
    const first = train(docs, { ...TEST_CONFIG, learningRate: 0.01 }, { epochs: 3 });
    const resumed = train(docs, { ...TEST_CONFIG, learningRate: 0.01 }, {
      epochs: 2, resumeFrom: { model: first.model, vocab: first.vocab },
    });
    expect(resumed.lossCurve[0]).toBeLessThan(first.lossCurve[0]);
  });
});
