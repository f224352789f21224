/**
 * Exchange formats shared with the retrieval side: corpus JSONL in
 * ({"id", "title", "abstract", "keywords"}), predictions JSONL out
 * ({"id", "keyphrases"}), one record per line, input order preserved.
 */

import * as fs from "node:fs";

import { CorpusDoc } from "./vocab.js";

export function readCorpusJsonl(path: string): CorpusDoc[] {
  const docs: CorpusDoc[] = [];
  const seen = new Set<string>();
  const lines = fs.readFileSync(path, "utf-8").split("\n");
  lines.forEach((line, index) => {
    if (!line.trim()) return;
    let record: unknown;
    try {
      record = JSON.parse(line);
    } catch {
      throw new Error(`${path}:${index + 1}: invalid JSON`);
    }
    const r = record as Record<string, unknown>;
    if (typeof r.id !== "string" || typeof r.title !== "string" ||
        typeof r.abstract !== "string") {
      throw new Error(`${path}:${index + 1}: missing id/title/abstract`);
    }
    if (seen.has(r.id)) throw new Error(`${path}:${index + 1}: duplicate id ${r.id}`);
    seen.add(r.id);
    const keywords = Array.isArray(r.keywords) ? (r.keywords as string[]) : [];
    docs.push({ id: r.id, title: r.title, abstract: r.abstract, keywords });
  });
  return docs;
}

export function writePredictionsJsonl(
  path: string, rows: Array<{ id: string; keyphrases: string[] }>,
): void {
  const lines = rows.map((row) => JSON.stringify(row));
  fs.writeFileSync(path, lines.join("\n") + (lines.length ? "\n" : ""));
}
