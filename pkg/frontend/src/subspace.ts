/**
 * Moral-foundation subspaces: one unit direction per foundation, the first
 * principal component over the 20 pole-word mean embeddings, sign-oriented so
 * the virtue pole projects positively.
 */

import type { EmbeddingExtractor } from "./embedding.js";

export const FOUNDATIONS = [
  "care/harm",
  "fairness/cheating",
  "loyalty/betrayal",
  "authority/subversion",
  "sanctity/degradation",
] as const;

export type Pole = "virtue" | "vice";

export interface LexiconEntry {
  foundation: string;
  pole: Pole;
  word: string;
  rank: number;
}

export interface MoralSubspace {
  foundations: string[];
  /** Unit-norm direction per foundation, virtue pole positive. */
  directions: Float64Array[];
  poleWords: { virtue: string[]; vice: string[] }[];
  extractor: string;
}

export class SubspaceError extends Error {}

export const SEED_WORDS_PER_POLE = 10;
export const OCCURRENCE_CAP = 1000;

/** Parse the lexicon TSV: foundation <tab> pole <tab> word <tab> rank. */
export function parseLexiconTsv(text: string): LexiconEntry[] {
  const entries: LexiconEntry[] = [];
  const lines = text.split("\n");
  for (let lineno = 0; lineno < lines.length; lineno++) {
    const line = lines[lineno]!.trim();
    if (line === "") continue;
    const parts = line.split("\t");
    if (parts.length !== 4) {
      throw new SubspaceError(
        `lexicon line ${lineno + 1}: expected 4 tab-separated columns`,
      );
    }
    const [foundation, pole, word, rankText] = parts;
    if (pole !== "virtue" && pole !== "vice") {
      throw new SubspaceError(`lexicon line ${lineno + 1}: bad pole ${pole}`);
    }
    const rank = Number(rankText);
    if (!Number.isInteger(rank) || rank < 1) {
      throw new SubspaceError(`lexicon line ${lineno + 1}: bad rank ${rankText}`);
    }
    entries.push({ foundation: foundation!, pole, word: word!, rank });
  }
  return entries;
}

/** Occurrences of each seed word: one context token list per occurrence. */
export type SeedOccurrences = Map<string, string[][]>;

export interface BuildSubspaceOptions {
  occurrenceCap?: number;
  wordsPerPole?: number;
}

export function buildSubspaces(
  lexicon: LexiconEntry[],
  extractor: EmbeddingExtractor,
  occurrences: SeedOccurrences = new Map(),
  options: BuildSubspaceOptions = {},
): MoralSubspace {
  const cap = options.occurrenceCap ?? OCCURRENCE_CAP;
  const perPole = options.wordsPerPole ?? SEED_WORDS_PER_POLE;
  const directions: Float64Array[] = [];
  const poleWords: { virtue: string[]; vice: string[] }[] = [];

  for (const foundation of FOUNDATIONS) {
    const virtue = topRanked(lexicon, foundation, "virtue", perPole);
    const vice = topRanked(lexicon, foundation, "vice", perPole);
    if (virtue.length < 2 || vice.length < 2) {
      throw new SubspaceError(
        `foundation ${foundation}: need at least 2 seed words per pole`,
      );
    }
    const means = [...virtue, ...vice].map((word) =>
      meanEmbedding(word, extractor, occurrences, cap),
    );
    const direction = firstPrincipalComponent(means, extractor.dim);
    // Orient so the virtue-pole centroid projects positively.
    const centroid = new Float64Array(extractor.dim);
    for (const mean of means.slice(0, virtue.length)) {
      for (let i = 0; i < extractor.dim; i++) centroid[i]! += mean[i]!;
    }
    if (dot(direction, centroid) < 0) {
      for (let i = 0; i < extractor.dim; i++) direction[i] = -direction[i]!;
    }
    directions.push(direction);
    poleWords.push({ virtue, vice });
  }
  return {
    foundations: [...FOUNDATIONS],
    directions,
    poleWords,
    extractor: extractor.name,
  };
}

function topRanked(
  lexicon: LexiconEntry[],
  foundation: string,
  pole: Pole,
  n: number,
): string[] {
  return lexicon
    .filter((e) => e.foundation === foundation && e.pole === pole)
    .sort((a, b) => a.rank - b.rank)
    .slice(0, n)
    .map((e) => e.word);
}

export function meanEmbedding(
  word: string,
  extractor: EmbeddingExtractor,
  occurrences: SeedOccurrences,
  cap: number,
): Float64Array {
  const contexts = (occurrences.get(word) ?? [[]]).slice(0, cap);
  const mean = new Float64Array(extractor.dim);
  for (const context of contexts) {
    const e = extractor.embed(word, context);
    for (let i = 0; i < extractor.dim; i++) mean[i]! += e[i]!;
  }
  for (let i = 0; i < extractor.dim; i++) mean[i]! /= contexts.length;
  return mean;
}

/** First principal component of mean-centered rows, by power iteration. */
export function firstPrincipalComponent(
  rows: Float64Array[],
  dim: number,
): Float64Array {
  const n = rows.length;
  const center = new Float64Array(dim);
  for (const row of rows) {
    for (let i = 0; i < dim; i++) center[i]! += row[i]! / n;
  }
  const centered = rows.map((row) => {
    const out = new Float64Array(dim);
    for (let i = 0; i < dim; i++) out[i] = row[i]! - center[i]!;
    return out;
  });

  // Deterministic start: the centered row with the largest norm.
  let v: Float64Array | null = null;
  let bestNorm = 0;
  for (const row of centered) {
    const rn = norm(row);
    if (rn > bestNorm) {
      bestNorm = rn;
      v = Float64Array.from(row);
    }
  }
  if (v === null || bestNorm < 1e-12) {
    throw new SubspaceError("degenerate PCA: all pole-word means coincide");
  }
  normalize(v);
  for (let iter = 0; iter < 300; iter++) {
    // v <- normalize(X^T X v) without materializing the covariance.
    const next = new Float64Array(dim);
    for (const row of centered) {
      const proj = dot(row, v);
      for (let i = 0; i < dim; i++) next[i]! += proj * row[i]!;
    }
    const nn = norm(next);
    if (nn < 1e-12) {
      throw new SubspaceError("degenerate PCA: zero covariance");
    }
    normalize(next);
    let delta = 0;
    for (let i = 0; i < dim; i++) {
      delta = Math.max(delta, Math.abs(Math.abs(next[i]!) - Math.abs(v[i]!)));
    }
    v = next;
    if (delta < 1e-13 && iter > 5) break;
  }
  return v;
}

export function dot(a: Float64Array, b: Float64Array): number {
  let s = 0;
  for (let i = 0; i < a.length; i++) s += a[i]! * b[i]!;
  return s;
}

export function norm(a: Float64Array): number {
  return Math.sqrt(dot(a, a));
}

function normalize(a: Float64Array): void {
  const n = norm(a);
  for (let i = 0; i < a.length; i++) a[i]! /= n;
}

export function cosine(a: Float64Array, b: Float64Array): number {
  const na = norm(a);
  const nb = norm(b);
  if (na === 0 || nb === 0) return 0;
  return dot(a, b) / (na * nb);
}

/** Signed projection of a word's mean embedding on a foundation direction. */
export function projectWord(
  word: string,
  foundation: number,
  subspace: MoralSubspace,
  extractor: EmbeddingExtractor,
  occurrences: SeedOccurrences = new Map(),
): number {
  const mean = meanEmbedding(word, extractor, occurrences, OCCURRENCE_CAP);
  return cosine(mean, subspace.directions[foundation]!);
}
