/**
 * Contextual embedding extraction behind an injected interface.
 *
 * The real pretrained-language-model backend lives outside this package and
 * is supplied by the caller; the deterministic synthetic backend here exists
 * so the whole pipeline can be exercised and tested offline. Lexicon words
 * are embedded near a signed per-foundation axis (virtue positive), all other
 * words get a stable pseudo-random direction derived from their spelling.
 */

import type { LexiconEntry } from "./subspace.js";

export interface EmbeddingExtractor {
  readonly dim: number;
  readonly name: string;
  /** Embedding of one occurrence of `word` inside `context` tokens. */
  embed(word: string, context: string[]): Float64Array;
}

function fnv1a(text: string): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    h ^= text.charCodeAt(i);
    h = Math.imul(h, 0x01000193);
  }
  return h >>> 0;
}

function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function gaussianVector(dim: number, seed: number): Float64Array {
  const next = mulberry32(seed);
  const out = new Float64Array(dim);
  for (let i = 0; i < dim; i += 2) {
    // Box-Muller
    const u = Math.max(next(), 1e-12);
    const v = next();
    const r = Math.sqrt(-2 * Math.log(u));
    out[i] = r * Math.cos(2 * Math.PI * v);
    if (i + 1 < dim) out[i + 1] = r * Math.sin(2 * Math.PI * v);
  }
  return out;
}

export interface SyntheticBackendOptions {
  dim?: number;
  seed?: number;
  lexicon?: LexiconEntry[];
  /** Length of the signed axis component for lexicon words. */
  axisScale?: number;
  /** Scale of the per-word jitter. */
  noiseScale?: number;
  /** Scale of the per-occurrence context jitter. */
  contextScale?: number;
}

export class SyntheticEmbeddingBackend implements EmbeddingExtractor {
  readonly dim: number;
  readonly name = "synthetic-hash-v1";
  private readonly seed: number;
  private readonly axisScale: number;
  private readonly noiseScale: number;
  private readonly contextScale: number;
  private readonly lexiconAxis = new Map<string, { axis: number; sign: number }>();
  private readonly foundationOrder: string[] = [];

  constructor(options: SyntheticBackendOptions = {}) {
    this.dim = options.dim ?? 16;
    this.seed = options.seed ?? 0;
    this.axisScale = options.axisScale ?? 1.0;
    this.noiseScale = options.noiseScale ?? 0.35;
    this.contextScale = options.contextScale ?? 0.05;
    for (const entry of options.lexicon ?? []) {
      if (!this.foundationOrder.includes(entry.foundation)) {
        this.foundationOrder.push(entry.foundation);
      }
      const axis = this.foundationOrder.indexOf(entry.foundation);
      if (axis >= this.dim) {
        throw new Error("synthetic backend dim too small for the lexicon");
      }
      this.lexiconAxis.set(entry.word, {
        axis,
        sign: entry.pole === "virtue" ? 1 : -1,
      });
    }
  }

  embed(word: string, context: string[]): Float64Array {
    const base = gaussianVector(this.dim, fnv1a(`w:${this.seed}:${word}`));
    const out = new Float64Array(this.dim);
    const pole = this.lexiconAxis.get(word);
    for (let i = 0; i < this.dim; i++) {
      out[i] = this.noiseScale * base[i]!;
    }
    if (pole !== undefined) {
      out[pole.axis] = out[pole.axis]! + pole.sign * this.axisScale;
    }
    if (context.length > 0) {
      const ctx = gaussianVector(
        this.dim,
        fnv1a(`c:${this.seed}:${context.join(" ")}`),
      );
      for (let i = 0; i < this.dim; i++) {
        out[i] = out[i]! + this.contextScale * ctx[i]!;
      }
    }
    return out;
  }
}
