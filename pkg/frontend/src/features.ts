/**
 * Feature-directory emission: per (node, concept) occurrence counts and
 * moral-subspace framing projections, written in the directory format shared
 * with the graph toolkit (manifest.json, counts.tsv, framing_k.tsv).
 */

import { mkdirSync, mkdtempSync, renameSync, rmSync, writeFileSync } from "node:fs";
import { dirname, join } from "node:path";

import type { EmbeddingExtractor } from "./embedding.js";
import { FOUNDATIONS, cosine, type MoralSubspace } from "./subspace.js";
import { CHUNKER_NAME, tokenize } from "./tokenize.js";

export interface NodeCorpus {
  node: string;
  docs: string[];
}

export class FeatureError extends Error {}

/** Sampling cap: at most this many occurrences embedded per node-concept. */
export const PROJECTION_OCCURRENCE_CAP = 100;
const CONTEXT_WINDOW = 5;

interface Occurrence {
  tokens: string[];
  start: number;
  length: number;
}

function findOccurrences(
  parts: string[],
  docsTokens: string[][],
  cap: number,
): { total: number; sampled: Occurrence[] } {
  let total = 0;
  const sampled: Occurrence[] = [];
  for (const tokens of docsTokens) {
    for (let i = 0; i + parts.length <= tokens.length; i++) {
      let hit = true;
      for (let j = 0; j < parts.length; j++) {
        if (tokens[i + j] !== parts[j]) {
          hit = false;
          break;
        }
      }
      if (!hit) continue;
      total++;
      if (sampled.length < cap) {
        sampled.push({ tokens, start: i, length: parts.length });
      }
    }
  }
  return { total, sampled };
}

function occurrenceEmbedding(
  occ: Occurrence,
  extractor: EmbeddingExtractor,
): Float64Array {
  const context = occ.tokens.slice(
    Math.max(0, occ.start - CONTEXT_WINDOW),
    Math.min(occ.tokens.length, occ.start + occ.length + CONTEXT_WINDOW),
  );
  // Multi-piece concepts use the mean-pooled embedding of their pieces.
  const mean = new Float64Array(extractor.dim);
  for (let j = 0; j < occ.length; j++) {
    const e = extractor.embed(occ.tokens[occ.start + j]!, context);
    for (let i = 0; i < extractor.dim; i++) mean[i]! += e[i]! / occ.length;
  }
  return mean;
}

export interface ProjectionResult {
  nodes: string[];
  concepts: string[];
  counts: number[][];
  /** framing[k][v][c] for foundation k. */
  framing: number[][][];
}

export function projectConcepts(
  corpus: NodeCorpus[],
  concepts: string[],
  subspace: MoralSubspace,
  extractor: EmbeddingExtractor,
  occurrenceCap = PROJECTION_OCCURRENCE_CAP,
): ProjectionResult {
  const nodes = corpus.map((c) => c.node);
  if (new Set(nodes).size !== nodes.length) {
    throw new FeatureError("duplicate node names in the corpus");
  }
  const counts: number[][] = [];
  const framing: number[][][] = FOUNDATIONS.map(() => []);
  for (const { docs } of corpus) {
    const docsTokens = docs.map(tokenize);
    const countRow: number[] = [];
    const framingRows: number[][] = FOUNDATIONS.map(() => []);
    for (const concept of concepts) {
      const parts = concept.split(" ");
      const { total, sampled } = findOccurrences(parts, docsTokens, occurrenceCap);
      countRow.push(total);
      if (sampled.length === 0) {
        // Missing concept: zero count and zero projections.
        for (let k = 0; k < FOUNDATIONS.length; k++) framingRows[k]!.push(0);
        continue;
      }
      const mean = new Float64Array(extractor.dim);
      for (const occ of sampled) {
        const e = occurrenceEmbedding(occ, extractor);
        for (let i = 0; i < extractor.dim; i++) mean[i]! += e[i]! / sampled.length;
      }
      for (let k = 0; k < FOUNDATIONS.length; k++) {
        const s = cosine(mean, subspace.directions[k]!);
        framingRows[k]!.push(Math.max(-1, Math.min(1, s)));
      }
    }
    counts.push(countRow);
    for (let k = 0; k < FOUNDATIONS.length; k++) framing[k]!.push(framingRows[k]!);
  }
  return { nodes, concepts: [...concepts], counts, framing };
}

/** Write the shared feature-directory format; the directory swap is atomic. */
export function writeFeatureDir(result: ProjectionResult, outDir: string): void {
  const staging = mkdtempSync(join(dirname(outDir), ".features-"));
  try {
    const manifest = {
      nodes: result.nodes,
      concepts: result.concepts,
      foundations: [...FOUNDATIONS],
      chunker: CHUNKER_NAME,
    };
    writeFileSync(
      join(staging, "manifest.json"),
      JSON.stringify(manifest, null, 1) + "\n",
    );
    writeFileSync(
      join(staging, "counts.tsv"),
      result.counts.map((row) => row.join("\t")).join("\n") + "\n",
    );
    for (let k = 0; k < FOUNDATIONS.length; k++) {
      writeFileSync(
        join(staging, `framing_${k}.tsv`),
        result.framing[k]!
          .map((row) => row.map((x) => formatFloat(x)).join("\t"))
          .join("\n") + "\n",
      );
    }
    rmSync(outDir, { recursive: true, force: true });
    mkdirSync(dirname(outDir), { recursive: true });
    renameSync(staging, outDir);
  } catch (err) {
    rmSync(staging, { recursive: true, force: true });
    throw err;
  }
}

function formatFloat(x: number): string {
  if (!Number.isFinite(x)) {
    throw new FeatureError(`non-finite framing value ${x}`);
  }
  // Plain decimal/exponent text that any standard float parser accepts.
  return String(x);
}
