/**
 * Sequence-to-sequence generator: bidirectional multi-layer GRU encoder,
 * GRU decoder with bilinear attention, and a copy gate mixing the vocabulary
 * softmax with the attention distribution over source positions, so source
 * out-of-vocabulary tokens remain generatable.
 */

import * as tf from "@tensorflow/tfjs";

tf.enableProdMode(); // skips per-op shape assertions; op overhead dominates on CPU

export interface GenConfig {
  vocabSize: number;
  embeddingDim: number;
  hiddenSize: number;
  encoderLayers: number;
  learningRate: number;
  gradientClipNorm: number;
  dropout: number;
  beamDepth: number;
  beamSize: number;
  maxSourceLen: number;
  seed: number;
}

/** Full-scale defaults (50k vocab, beam 200). */
export const DEFAULT_CONFIG: GenConfig = {
  vocabSize: 50_000,
  embeddingDim: 150,
  hiddenSize: 300,
  encoderLayers: 2,
  learningRate: 1e-4,
  gradientClipNorm: 0.1,
  dropout: 0.5,
  beamDepth: 6,
  beamSize: 200,
  maxSourceLen: 200,
  seed: 13,
};

/** Desk-scale defaults: the full train+generate cycle runs in seconds. */
export const TOY_CONFIG: GenConfig = {
  ...DEFAULT_CONFIG,
  vocabSize: 5_000,
  beamSize: 10,
};

interface GruParams {
  wz: tf.Variable; uz: tf.Variable; bz: tf.Variable;
  wr: tf.Variable; ur: tf.Variable; br: tf.Variable;
  wh: tf.Variable; uh: tf.Variable; bh: tf.Variable;
}

export interface ModelParams {
  embedding: tf.Variable;
  encoder: { forward: GruParams; backward: GruParams }[];
  bridgeW: tf.Variable;
  bridgeB: tf.Variable;
  decoder: GruParams;
  attnW: tf.Variable;
  readoutW: tf.Variable;
  readoutB: tf.Variable;
  outW: tf.Variable;
  outB: tf.Variable;
  gateW: tf.Variable;
  gateB: tf.Variable;
}

export interface Model {
  config: GenConfig;
  params: ModelParams;
}

export function allVariables(params: ModelParams): tf.Variable[] {
  const list: tf.Variable[] = [params.embedding];
  for (const layer of params.encoder) {
    for (const cell of [layer.forward, layer.backward]) {
      list.push(cell.wz, cell.uz, cell.bz, cell.wr, cell.ur, cell.br,
                cell.wh, cell.uh, cell.bh);
    }
  }
  const d = params.decoder;
  list.push(params.bridgeW, params.bridgeB,
            d.wz, d.uz, d.bz, d.wr, d.ur, d.br, d.wh, d.uh, d.bh,
            params.attnW, params.readoutW, params.readoutB,
            params.outW, params.outB, params.gateW, params.gateB);
  return list;
}

export function createModel(config: GenConfig): Model {
  let seed = config.seed;
  const init = (shape: number[]) =>
    tf.variable(tf.randomUniform(shape, -0.08, 0.08, "float32", seed++));
  const zeros = (shape: number[]) => tf.variable(tf.zeros(shape));
  const gru = (inputDim: number, hidden: number): GruParams => ({
    wz: init([inputDim, hidden]), uz: init([hidden, hidden]), bz: zeros([hidden]),
    wr: init([inputDim, hidden]), ur: init([hidden, hidden]), br: zeros([hidden]),
    wh: init([inputDim, hidden]), uh: init([hidden, hidden]), bh: zeros([hidden]),
  });
  const { embeddingDim: e, hiddenSize: h, vocabSize: v } = config;
  const encoder = [];
  for (let layer = 0; layer < config.encoderLayers; layer++) {
    const inputDim = layer === 0 ? e : 2 * h;
    encoder.push({ forward: gru(inputDim, h), backward: gru(inputDim, h) });
  }
  return {
    config,
    params: {
      embedding: init([v, e]),
      encoder,
      bridgeW: init([2 * h, h]),
      bridgeB: zeros([h]),
      decoder: gru(e, h),
      attnW: init([h, 2 * h]),
      readoutW: init([3 * h, h]),
      readoutB: zeros([h]),
      outW: init([h, v]),
      outB: zeros([v]),
      gateW: init([3 * h + e, 1]),
      gateB: zeros([1]),
    },
  };
}

/**
 * Embedding lookup. The one-hot matmul route is used during training: its
 * gradient is a plain matmul, which every backend provides (gather's
 * gradient kernel is missing from the wasm backend).
 */
function embedLookup(
  embedding: tf.Variable, ids: tf.Tensor, viaOneHot: boolean,
): tf.Tensor {
  const vocab = embedding.shape[0] as number;
  const dim = embedding.shape[1] as number;
  const flat = ids.flatten().cast("int32");
  const rows = viaOneHot
    ? tf.matMul(tf.oneHot(flat, vocab).cast("float32"), embedding as tf.Tensor2D)
    : tf.gather(embedding, flat);
  return rows.reshape([...ids.shape, dim]);
}

function gruStep(cell: GruParams, x: tf.Tensor2D, h: tf.Tensor2D): tf.Tensor2D {
  const z = tf.sigmoid(tf.add(tf.add(tf.matMul(x, cell.wz as tf.Tensor2D),
                                     tf.matMul(h, cell.uz as tf.Tensor2D)), cell.bz));
  const r = tf.sigmoid(tf.add(tf.add(tf.matMul(x, cell.wr as tf.Tensor2D),
                                     tf.matMul(h, cell.ur as tf.Tensor2D)), cell.br));
  const hh = tf.tanh(tf.add(tf.add(tf.matMul(x, cell.wh as tf.Tensor2D),
                                   tf.matMul(tf.mul(r, h), cell.uh as tf.Tensor2D)),
                            cell.bh));
  return tf.add(tf.mul(tf.sub(1, z), h), tf.mul(z, hh)) as tf.Tensor2D;
}

/** Masked scan: hidden state freezes once the sequence has ended. */
function scan(
  cell: GruParams, inputs: tf.Tensor2D[], mask: tf.Tensor2D[], hidden: number,
  reverse: boolean,
): tf.Tensor2D[] {
  const batch = inputs[0].shape[0];
  let h = tf.zeros([batch, hidden]) as tf.Tensor2D;
  const outputs: tf.Tensor2D[] = new Array(inputs.length);
  const order = [...inputs.keys()];
  if (reverse) order.reverse();
  for (const t of order) {
    const next = gruStep(cell, inputs[t], h);
    h = tf.add(tf.mul(mask[t], next), tf.mul(tf.sub(1, mask[t]), h)) as tf.Tensor2D;
    outputs[t] = h;
  }
  return outputs;
}

export interface EncoderState {
  /** [batch, srcLen, 2*hidden] */
  outputs: tf.Tensor3D;
  /** decoder initial state [batch, hidden] */
  state: tf.Tensor2D;
}

export interface Batch {
  srcIds: tf.Tensor2D;    // int32 [batch, srcLen], OOV as UNK
  srcMask: tf.Tensor2D;   // float [batch, srcLen]
  srcOneHot: tf.Tensor3D; // float [batch, srcLen, extVocab]
  extVocab: number;       // vocabSize + max OOV count in the batch
}

export function encode(
  model: Model, batch: Batch, dropoutRate: number, seed: number,
  trainableEmbed = false,
): EncoderState {
  const { params, config } = model;
  const maskCols = tf.unstack(tf.expandDims(batch.srcMask, 2), 1) as tf.Tensor2D[];
  let inputs = tf.unstack(
    embedLookup(params.embedding, batch.srcIds, trainableEmbed), 1,
  ) as tf.Tensor2D[];
  if (dropoutRate > 0) {
    inputs = inputs.map((x, t) => tf.dropout(x, dropoutRate, undefined, seed + t) as tf.Tensor2D);
  }
  let final: tf.Tensor2D | null = null;
  for (let layer = 0; layer < config.encoderLayers; layer++) {
    const fwd = scan(params.encoder[layer].forward, inputs, maskCols,
                     config.hiddenSize, false);
    const bwd = scan(params.encoder[layer].backward, inputs, maskCols,
                     config.hiddenSize, true);
    inputs = fwd.map((f, t) => tf.concat([f, bwd[t]], 1) as tf.Tensor2D);
    // forward end state is frozen at each sequence's last real token;
    // backward end state is bwd at position 0
    final = tf.concat([fwd[fwd.length - 1], bwd[0]], 1) as tf.Tensor2D;
  }
  const outputs = tf.stack(inputs, 1) as tf.Tensor3D;
  const state = tf.tanh(
    tf.add(tf.matMul(final!, params.bridgeW as tf.Tensor2D), params.bridgeB),
  ) as tf.Tensor2D;
  return { outputs, state };
}

export interface StepResult {
  /** mixture distribution over the extended vocabulary [batch, extVocab] */
  dist: tf.Tensor2D;
  state: tf.Tensor2D;
  attention: tf.Tensor2D; // [batch, srcLen]
  pGen: tf.Tensor2D;      // [batch, 1]
}

/**
 * One decoding step. `pGenOverride` pins the copy gate (1 = vocabulary only,
 * 0 = copy only) for the mechanism-isolation tests.
 */
export function decodeStep(
  model: Model, batch: Batch, encoded: EncoderState, prevIds: tf.Tensor1D,
  state: tf.Tensor2D, dropoutRate: number, seed: number,
  pGenOverride: number | null = null, trainableEmbed = false,
): StepResult {
  const { params } = model;
  let embedded = embedLookup(params.embedding, prevIds, trainableEmbed) as tf.Tensor2D;
  if (dropoutRate > 0) {
    embedded = tf.dropout(embedded, dropoutRate, undefined, seed) as tf.Tensor2D;
  }
  const nextState = gruStep(params.decoder, embedded, state);
  // bilinear attention over encoder outputs, padded positions masked out
  const query = tf.matMul(nextState, params.attnW as tf.Tensor2D); // [B, 2H]
  const scores = tf.squeeze(
    tf.matMul(encoded.outputs, tf.expandDims(query, 2)), [2],
  ) as tf.Tensor2D; // [B, S]
  const masked = tf.add(scores, tf.mul(tf.sub(1, batch.srcMask), -1e9));
  const attention = tf.softmax(masked) as tf.Tensor2D;
  const context = tf.squeeze(
    tf.matMul(tf.expandDims(attention, 1), encoded.outputs), [1],
  ) as tf.Tensor2D; // [B, 2H]
  const readout = tf.tanh(
    tf.add(tf.matMul(tf.concat([nextState, context], 1),
                     params.readoutW as tf.Tensor2D), params.readoutB),
  );
  const pVocab = tf.softmax(
    tf.add(tf.matMul(readout as tf.Tensor2D, params.outW as tf.Tensor2D), params.outB),
  ) as tf.Tensor2D; // [B, V]
  let pGen: tf.Tensor2D;
  if (pGenOverride === null) {
    pGen = tf.sigmoid(
      tf.add(tf.matMul(tf.concat([nextState, context, embedded], 1),
                       params.gateW as tf.Tensor2D), params.gateB),
    ) as tf.Tensor2D;
  } else {
    pGen = tf.fill([prevIds.shape[0], 1], pGenOverride) as tf.Tensor2D;
  }
  const vocabPadded = tf.pad(pVocab, [[0, 0], [0, batch.extVocab - pVocab.shape[1]]]);
  const pCopy = tf.squeeze(
    tf.matMul(tf.expandDims(attention, 1), batch.srcOneHot), [1],
  ) as tf.Tensor2D; // [B, extVocab]
  const dist = tf.add(
    tf.mul(pGen, vocabPadded), tf.mul(tf.sub(1, pGen), pCopy),
  ) as tf.Tensor2D;
  return { dist, state: nextState, attention, pGen };
}

/**
 * Teacher-forced negative log-likelihood over a batch. Decoder inputs are
 * [<bos>, target[:-1]] with extended ids folded to <unk> for the embedding.
 */
export function batchLoss(
  model: Model, batch: Batch, tgtIn: tf.Tensor2D, tgtOut: tf.Tensor2D,
  tgtMask: tf.Tensor2D, dropoutRate: number, seed: number,
): tf.Scalar {
  return tf.tidy(() => {
    const encoded = encode(model, batch, dropoutRate, seed, true);
    const steps = tgtIn.shape[1];
    const inputs = tf.unstack(tgtIn, 1) as tf.Tensor1D[];
    const targets = tf.unstack(tf.oneHot(tgtOut.cast("int32"), batch.extVocab), 1);
    const maskCols = tf.unstack(tgtMask, 1);
    let state = encoded.state;
    let total = tf.scalar(0);
    for (let t = 0; t < steps; t++) {
      const step = decodeStep(model, batch, encoded, inputs[t].cast("int32") as tf.Tensor1D,
                              state, dropoutRate, seed + 1000 + t, null, true);
      state = step.state;
      const picked = tf.sum(tf.mul(step.dist, targets[t]), 1); // [B]
      const nll = tf.neg(tf.log(tf.add(picked, 1e-12)));
      total = tf.add(total, tf.sum(tf.mul(nll, maskCols[t]))) as tf.Scalar;
    }
    return tf.div(total, tf.sum(tgtMask)) as tf.Scalar;
  });
}
