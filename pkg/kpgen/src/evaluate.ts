/**
 * Intrinsic metric: F1 at top-k with stemmed exact matching, identical in
 * convention to the retrieval side's metric (precision divides by k, each
 * distinct gold phrase counts once).
 */

import { normalizePhrase } from "./tokenize.js";

export function f1AtK(predicted: string[], gold: string[], k = 5): number {
  if (k < 1) throw new Error("k must be >= 1");
  const goldForms = new Set(gold.map(normalizePhrase).filter((f) => f));
  if (goldForms.size === 0) throw new Error("gold phrase list is empty");
  const topForms = new Set(
    predicted.slice(0, k).map(normalizePhrase).filter((f) => f),
  );
  let matched = 0;
  for (const form of goldForms) if (topForms.has(form)) matched++;
  const precision = matched / k;
  const recall = matched / goldForms.size;
  if (precision + recall === 0) return 0;
  return (2 * precision * recall) / (precision + recall);
}

export interface EvalSummary {
  meanF1: number;
  perDoc: Array<{ id: string; f1: number }>;
}

export function evaluatePredictions(
  predictions: Map<string, string[]>, gold: Map<string, string[]>, k = 5,
): EvalSummary {
  const perDoc: Array<{ id: string; f1: number }> = [];
  for (const [id, goldPhrases] of gold) {
    if (goldPhrases.length === 0) continue;
    perDoc.push({ id, f1: f1AtK(predictions.get(id) ?? [], goldPhrases, k) });
  }
  if (perDoc.length === 0) throw new Error("no documents with gold keyphrases");
  const meanF1 = perDoc.reduce((acc, row) => acc + row.f1, 0) / perDoc.length;
  return { meanF1, perDoc };
}
