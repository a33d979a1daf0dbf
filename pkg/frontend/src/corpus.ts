/**
 * Corpus loading and political-comment filtering.
 *
 * Input format: one JSON-lines file per node, each line {"text": ...}.
 */

import { readFileSync } from "node:fs";
import { basename } from "node:path";

import { classify, type NBModel } from "./nb.js";
import type { NodeCorpus } from "./features.js";

export class CorpusError extends Error {}

export function loadJsonl(path: string): string[] {
  const docs: string[] = [];
  const lines = readFileSync(path, "utf8").split("\n");
  for (let lineno = 0; lineno < lines.length; lineno++) {
    const line = lines[lineno]!.trim();
    if (line === "") continue;
    let doc: unknown;
    try {
      doc = JSON.parse(line);
    } catch {
      throw new CorpusError(`${path}:${lineno + 1}: malformed JSON line`);
    }
    if (
      typeof doc !== "object" ||
      doc === null ||
      typeof (doc as { text?: unknown }).text !== "string"
    ) {
      throw new CorpusError(`${path}:${lineno + 1}: expected {"text": ...}`);
    }
    docs.push((doc as { text: string }).text);
  }
  return docs;
}

export function loadNodeCorpus(paths: string[]): NodeCorpus[] {
  return paths.map((path) => ({
    node: basename(path).replace(/\.jsonl$/, ""),
    docs: loadJsonl(path),
  }));
}

/** Keep the documents the classifier marks with the political label. */
export function filterPolitical(
  model: NBModel,
  docs: string[],
  politicalLabel: string,
): string[] {
  if (!model.labels.includes(politicalLabel)) {
    throw new CorpusError(`model has no label ${politicalLabel}`);
  }
  return docs.filter((doc) => classify(model, doc).label === politicalLabel);
}
