/**
 * Vocabulary with reserved control ids and per-example extended ids for
 * source out-of-vocabulary tokens (the copy mechanism's targets).
 */

import { tokenize } from "./tokenize.js";

export const PAD = 0;
export const UNK = 1;
export const BOS = 2;
export const EOS = 3;
export const SEP = 4;
export const SPECIALS = ["<pad>", "<unk>", "<bos>", "<eos>", "<sep>"];

export interface Vocab {
  tokenToId: Map<string, number>;
  idToToken: string[];
}

export interface CorpusDoc {
  id: string;
  title: string;
  abstract: string;
  keywords: string[];
}

export function sourceTokens(doc: CorpusDoc, maxLen: number): string[] {
  return tokenize(doc.title + " " + doc.abstract).slice(0, maxLen);
}

/** Keep the most frequent tokens (count desc, token asc) under the cap. */
export function buildVocab(docs: CorpusDoc[], vocabSize: number): Vocab {
  const counts = new Map<string, number>();
  for (const doc of docs) {
    const tokens = [
      ...tokenize(doc.title + " " + doc.abstract),
      ...doc.keywords.flatMap((phrase) => tokenize(phrase)),
    ];
    for (const token of tokens) counts.set(token, (counts.get(token) ?? 0) + 1);
  }
  const kept = [...counts.entries()]
    .sort((a, b) => b[1] - a[1] || (a[0] < b[0] ? -1 : 1))
    .slice(0, Math.max(0, vocabSize - SPECIALS.length))
    .map(([token]) => token);
  const idToToken = [...SPECIALS, ...kept];
  const tokenToId = new Map(idToToken.map((token, id) => [token, id]));
  return { tokenToId, idToToken };
}

export interface EncodedSource {
  /** in-vocabulary ids, OOV mapped to UNK (for the embedding) */
  ids: number[];
  /** extended ids: OOV tokens get vocabSize + slot (for the copy path) */
  extIds: number[];
  /** OOV surfaces in first-occurrence order; slot i -> vocabSize + i */
  oov: string[];
}

export function encodeSource(tokens: string[], vocab: Vocab): EncodedSource {
  const ids: number[] = [];
  const extIds: number[] = [];
  const oov: string[] = [];
  for (const token of tokens) {
    const id = vocab.tokenToId.get(token);
    if (id !== undefined) {
      ids.push(id);
      extIds.push(id);
    } else {
      let slot = oov.indexOf(token);
      if (slot < 0) {
        slot = oov.length;
        oov.push(token);
      }
      ids.push(UNK);
      extIds.push(vocab.idToToken.length + slot);
    }
  }
  return { ids, extIds, oov };
}

/**
 * Target stream: phrase tokens joined by <sep>, terminated by <eos>, in
 * author order. Tokens outside the vocabulary use the source's extended id
 * when copyable, <unk> otherwise.
 */
export function encodeTarget(
  phrases: string[], vocab: Vocab, sourceOov: string[],
): number[] {
  const out: number[] = [];
  phrases.forEach((phrase, index) => {
    if (index > 0) out.push(SEP);
    for (const token of tokenize(phrase)) {
      const id = vocab.tokenToId.get(token);
      if (id !== undefined) out.push(id);
      else {
        const slot = sourceOov.indexOf(token);
        out.push(slot >= 0 ? vocab.idToToken.length + slot : UNK);
      }
    }
  });
  out.push(EOS);
  return out;
}

/** Extended id -> surface token (vocab entry or copied source OOV). */
export function surfaceOf(extId: number, vocab: Vocab, sourceOov: string[]): string {
  if (extId < vocab.idToToken.length) return vocab.idToToken[extId];
  return sourceOov[extId - vocab.idToToken.length] ?? "<bad-id>";
}
