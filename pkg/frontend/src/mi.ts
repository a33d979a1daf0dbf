/**
 * Concept mining: mutual information between document-level term presence
 * and the political/background class, with the noun-phrase filter applied
 * before ranking. Presence (not frequency) is used deliberately; the choice
 * is recorded on the resulting table.
 */

import {
  CHUNKER_NAME,
  appearsMostlyInNounPhrases,
  bigrams,
  tokenize,
} from "./tokenize.js";

export interface ConceptEntry {
  term: string;
  mi: number;
  nounPhraseSurvivor: boolean;
}

export interface ConceptTable {
  concepts: ConceptEntry[];
  k: number;
  chunker: string;
  presenceBased: true;
  warning?: string;
}

export class MiError extends Error {}

/** MI in bits between a binary presence variable and the binary class. */
export function miBits(
  n11: number,
  n10: number,
  n01: number,
  n00: number,
): number {
  const n = n11 + n10 + n01 + n00;
  if (n === 0) throw new MiError("empty contingency table");
  let mi = 0;
  const rows = [n11 + n10, n01 + n00]; // presence marginals
  const cols = [n11 + n01, n10 + n00]; // class marginals
  const cells = [
    [n11, 0, 0],
    [n10, 0, 1],
    [n01, 1, 0],
    [n00, 1, 1],
  ] as const;
  for (const [cell, r, c] of cells) {
    if (cell === 0) continue;
    mi += (cell / n) * Math.log2((cell * n) / (rows[r]! * cols[c]!));
  }
  return mi;
}

function termsOf(tokens: string[]): Set<string> {
  return new Set([...tokens, ...bigrams(tokens)]);
}

/**
 * Rank unigrams and bigrams by MI against the political/background split.
 *
 * Terms failing the noun-phrase test are dropped before ranking. When k
 * exceeds the surviving vocabulary the whole table is returned with a
 * warning instead of an error.
 */
export function selectConcepts(
  politicalDocs: string[],
  backgroundDocs: string[],
  k = 1000,
): ConceptTable {
  if (politicalDocs.length === 0 || backgroundDocs.length === 0) {
    throw new MiError("both document classes must be non-empty");
  }
  const polTokens = politicalDocs.map(tokenize);
  const bgTokens = backgroundDocs.map(tokenize);
  const allTokens = [...polTokens, ...bgTokens];

  const polPresence = new Map<string, number>();
  const bgPresence = new Map<string, number>();
  for (const tokens of polTokens) {
    for (const term of termsOf(tokens)) {
      polPresence.set(term, (polPresence.get(term) ?? 0) + 1);
    }
  }
  for (const tokens of bgTokens) {
    for (const term of termsOf(tokens)) {
      bgPresence.set(term, (bgPresence.get(term) ?? 0) + 1);
    }
  }
  const vocabulary = new Set([...polPresence.keys(), ...bgPresence.keys()]);
  if (vocabulary.size === 0) {
    throw new MiError("empty vocabulary");
  }

  const nPol = politicalDocs.length;
  const nBg = backgroundDocs.length;
  const survivors: ConceptEntry[] = [];
  for (const term of vocabulary) {
    if (!appearsMostlyInNounPhrases(term, allTokens)) continue;
    const n11 = polPresence.get(term) ?? 0;
    const n10 = bgPresence.get(term) ?? 0;
    survivors.push({
      term,
      mi: miBits(n11, n10, nPol - n11, nBg - n10),
      nounPhraseSurvivor: true,
    });
  }
  survivors.sort((a, b) => b.mi - a.mi || (a.term < b.term ? -1 : 1));

  const table: ConceptTable = {
    concepts: survivors.slice(0, k),
    k,
    chunker: CHUNKER_NAME,
    presenceBased: true,
  };
  if (survivors.length < k) {
    table.warning =
      `requested top ${k} but only ${survivors.length} terms survive ` +
      "the noun-phrase filter; returning all of them";
  }
  return table;
}
