/**
 * Phrase-level beam search: each hypothesis is one keyphrase, finished by
 * <sep> or <eos> or the depth cap. Finished phrases are pooled, ranked by
 * sequence log-probability (no length normalization), deduplicated after
 * stemming, and the top-k survive. beamSize = 1 is exactly greedy decoding.
 */

import * as tf from "@tensorflow/tfjs";

import { Batch, EncoderState, Model, decodeStep, encode } from "./model.js";
import { normalizePhrase } from "./tokenize.js";
import { BOS, EOS, PAD, SEP, UNK, Vocab, encodeSource, surfaceOf } from "./vocab.js";

interface Hypothesis {
  tokens: number[]; // extended ids, no control tokens
  logProb: number;
  state: tf.Tensor2D;
  prevId: number; // embedding input for the next step (in-vocab id)
}

export interface ScoredPhrase {
  phrase: string;
  logProb: number;
}

export interface DecodeOptions {
  beamDepth?: number;
  beamSize?: number;
  pGenOverride?: number | null;
}

/** tf.tidy for plain-value results (its typing only admits tensors). */
function tidyValue<T>(fn: () => T): T {
  return tf.tidy(fn as unknown as () => tf.TensorContainer) as unknown as T;
}

function singleDocBatch(tokens: string[], vocab: Vocab) {
  const source = encodeSource(tokens, vocab);
  const extVocab = vocab.idToToken.length + source.oov.length;
  const batch: Batch = {
    srcIds: tf.tensor2d([source.ids], undefined, "int32"),
    srcMask: tf.tensor2d([Array(source.ids.length).fill(1)]),
    srcOneHot: tf.oneHot(
      tf.tensor2d([source.extIds], undefined, "int32"), extVocab,
    ).cast("float32") as tf.Tensor3D,
    extVocab,
  };
  return { batch, source };
}

/** Beam-decode candidate keyphrases for one tokenized source document. */
export function decodePhrases(
  model: Model, vocab: Vocab, tokens: string[], options: DecodeOptions = {},
): ScoredPhrase[] {
  if (tokens.length === 0) return [];
  const beamDepth = options.beamDepth ?? model.config.beamDepth;
  const beamSize = options.beamSize ?? model.config.beamSize;
  const pGenOverride = options.pGenOverride ?? null;
  const vocabLimit = vocab.idToToken.length;
  // one tidy scope: every intermediate (beam states included) dies on return
  return tidyValue(() => {
    const { batch, source } = singleDocBatch(tokens, vocab);
    const encoded: EncoderState = encode(model, batch, 0, 0);
    let beams: Hypothesis[] = [{
      tokens: [], logProb: 0, state: encoded.state, prevId: BOS,
    }];
    const finished: ScoredPhrase[] = [];
    const finish = (hyp: Pick<Hypothesis, "tokens" | "logProb">) => {
      if (hyp.tokens.length === 0) return;
      const words = hyp.tokens.map((id) => surfaceOf(id, vocab, source.oov));
      finished.push({ phrase: words.join(" "), logProb: hyp.logProb });
    };

    for (let depth = 0; depth < beamDepth && beams.length > 0; depth++) {
      const candidates: Hypothesis[] = [];
      for (const beam of beams) {
        const step = decodeStep(
          model, batch, encoded, tf.tensor1d([beam.prevId], "int32"),
          beam.state, 0, 0, pGenOverride,
        );
        const probs = (step.dist.arraySync() as number[][])[0];
        const order = [...probs.keys()].sort((a, b) => probs[b] - probs[a] || a - b);
        for (const id of order.slice(0, beamSize + 2)) {
          if (id === PAD || id === UNK || id === BOS) continue;
          const logProb = beam.logProb + Math.log(probs[id] + 1e-12);
          if (id === SEP || id === EOS) {
            finish({ tokens: beam.tokens, logProb });
            continue;
          }
          candidates.push({
            tokens: [...beam.tokens, id],
            logProb,
            state: step.state,
            prevId: id < vocabLimit ? id : UNK,
          });
        }
      }
      candidates.sort((a, b) => b.logProb - a.logProb);
      beams = candidates.slice(0, beamSize);
    }
    beams.forEach(finish); // depth cap: treat still-open phrases as complete
    finished.sort((a, b) => b.logProb - a.logProb);
    return finished;
  });
}

/** Top-k phrases, deduplicated on their stemmed forms, best first. */
export function generateKeyphrases(
  model: Model, vocab: Vocab, tokens: string[], k: number,
  options: DecodeOptions = {},
): string[] {
  const seen = new Set<string>();
  const out: string[] = [];
  for (const { phrase } of decodePhrases(model, vocab, tokens, options)) {
    const key = normalizePhrase(phrase);
    if (!key || seen.has(key)) continue;
    seen.add(key);
    out.push(phrase);
    if (out.length >= k) break;
  }
  return out;
}

/** Greedy reference decoder for one phrase (used to pin beamSize=1). */
export function greedyPhrase(
  model: Model, vocab: Vocab, tokens: string[], maxDepth: number,
): ScoredPhrase | null {
  return tidyValue(() => {
    const { batch, source } = singleDocBatch(tokens, vocab);
    const encoded = encode(model, batch, 0, 0);
    let state = encoded.state;
    let prevId = BOS;
    let logProb = 0;
    const words: string[] = [];
    for (let depth = 0; depth < maxDepth; depth++) {
      const step = decodeStep(model, batch, encoded,
                              tf.tensor1d([prevId], "int32"), state, 0, 0);
      state = step.state;
      const probs = (step.dist.arraySync() as number[][])[0];
      let best = -1;
      for (let id = 0; id < probs.length; id++) {
        if (id === PAD || id === UNK || id === BOS) continue;
        if (best < 0 || probs[id] > probs[best]) best = id;
      }
      logProb += Math.log(probs[best] + 1e-12);
      if (best === SEP || best === EOS) break;
      words.push(surfaceOf(best, vocab, source.oov));
      prevId = best < vocab.idToToken.length ? best : UNK;
    }
    if (words.length === 0) return null;
    return { phrase: words.join(" "), logProb };
  });
}
