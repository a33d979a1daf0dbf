import type { LabeledDoc } from "../src/nb.js";
import type { LexiconEntry } from "../src/subspace.js";
import { FOUNDATIONS } from "../src/subspace.js";

/** Deterministic PRNG (mulberry32) for corpus construction. */
export function rng(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function pick<T>(items: T[], next: () => number): T {
  return items[Math.floor(next() * items.length)]!;
}

const FOUNDATION_STEMS = ["care", "fair", "loyal", "authority", "pure"];

/**
 * Synthetic seed lexicon: `wordsPerPole` words per pole per foundation.
 * Suffixes are letters (a, b, c, ...) so the words survive tokenization,
 * which strips digits.
 */
export function makeLexicon(wordsPerPole: number): LexiconEntry[] {
  const entries: LexiconEntry[] = [];
  FOUNDATIONS.forEach((foundation, k) => {
    for (let r = 1; r <= wordsPerPole; r++) {
      const suffix = String.fromCharCode(96 + r);
      entries.push({
        foundation,
        pole: "virtue",
        word: `${FOUNDATION_STEMS[k]}virtue${suffix}`,
        rank: r,
      });
      entries.push({
        foundation,
        pole: "vice",
        word: `${FOUNDATION_STEMS[k]}vice${suffix}`,
        rank: r,
      });
    }
  });
  return entries;
}

export const PLANTED_POLITICAL = [
  "filibuster",
  "gerrymander",
  "caucus",
  "electorate",
  "senate",
];

export const PLANTED_BACKGROUND = [
  "kitten",
  "recipe",
  "guitar",
  "holiday",
  "garden",
];

const SHARED_WORDS = [
  "people", "city", "story", "question", "moment", "reason",
  "idea", "group", "plan", "water", "house", "road",
];

/**
 * Separable two-class corpus. Every political document carries all five
 * planted exclusive terms; background documents carry three of their own.
 */
export function makeCorpus(docsPerClass: number, seed: number): LabeledDoc[] {
  const next = rng(seed);
  const docs: LabeledDoc[] = [];
  for (let i = 0; i < docsPerClass; i++) {
    const polWords = [...PLANTED_POLITICAL];
    const bgWords = PLANTED_BACKGROUND.slice(0, 3);
    for (let j = 0; j < 6; j++) {
      polWords.push(pick(SHARED_WORDS, next));
      bgWords.push(pick(SHARED_WORDS, next));
    }
    shuffle(polWords, next);
    shuffle(bgWords, next);
    docs.push({ text: polWords.join(" "), label: "political" });
    docs.push({ text: bgWords.join(" "), label: "background" });
  }
  return docs;
}

function shuffle<T>(items: T[], next: () => number): void {
  for (let i = items.length - 1; i > 0; i--) {
    const j = Math.floor(next() * (i + 1));
    [items[i], items[j]] = [items[j]!, items[i]!];
  }
}
