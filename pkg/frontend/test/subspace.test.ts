import { describe, expect, it } from "vitest";

import { SyntheticEmbeddingBackend, type EmbeddingExtractor } from "../src/embedding.js";
import {
  FOUNDATIONS,
  SubspaceError,
  buildSubspaces,
  cosine,
  norm,
  parseLexiconTsv,
  projectWord,
} from "../src/subspace.js";
import { makeLexicon } from "./helpers.js";

describe("parseLexiconTsv", () => {
  it("parses valid rows and skips blank lines", () => {
    const entries = parseLexiconTsv(
      "care/harm\tvirtue\tkindness\t1\n\ncare/harm\tvice\tcruelty\t2\n",
    );
    expect(entries).toEqual([
      { foundation: "care/harm", pole: "virtue", word: "kindness", rank: 1 },
      { foundation: "care/harm", pole: "vice", word: "cruelty", rank: 2 },
    ]);
  });

  it("rejects malformed rows", () => {
    expect(() => parseLexiconTsv("only three\tcolumns\there")).toThrow(SubspaceError);
    expect(() => parseLexiconTsv("f\tneutral\tword\t1")).toThrow(/bad pole/);
    expect(() => parseLexiconTsv("f\tvirtue\tword\tzero")).toThrow(/bad rank/);
    expect(() => parseLexiconTsv("f\tvirtue\tword\t0")).toThrow(/bad rank/);
  });
});

describe("buildSubspaces", () => {
  const lexicon = makeLexicon(10);
  const backend = new SyntheticEmbeddingBackend({ lexicon, seed: 3 });
  const subspace = buildSubspaces(lexicon, backend);

  it("produces one unit-norm direction per foundation", () => {
    expect(subspace.foundations).toEqual([...FOUNDATIONS]);
    expect(subspace.directions.length).toBe(FOUNDATIONS.length);
    for (const direction of subspace.directions) {
      expect(norm(direction)).toBeCloseTo(1.0, 9);
    }
    expect(subspace.extractor).toBe(backend.name);
  });

  it("projects virtue seed words positively and vice words negatively", () => {
    for (let k = 0; k < FOUNDATIONS.length; k++) {
      const { virtue, vice } = subspace.poleWords[k]!;
      expect(virtue.length).toBe(10);
      expect(vice.length).toBe(10);
      expect(projectWord(virtue[0]!, k, subspace, backend)).toBeGreaterThan(0);
      expect(projectWord(vice[0]!, k, subspace, backend)).toBeLessThan(0);
    }
  });

  it("rejects foundations with too few seed words", () => {
    expect(() => buildSubspaces(makeLexicon(1), backend)).toThrow(
      /at least 2 seed words/,
    );
  });

  it("rejects a degenerate extractor whose embeddings coincide", () => {
    const constant: EmbeddingExtractor = {
      dim: 4,
      name: "constant",
      embed: () => Float64Array.from([1, 2, 3, 4]),
    };
    expect(() => buildSubspaces(makeLexicon(5), constant)).toThrow(SubspaceError);
  });
});

describe("cosine", () => {
  it("is one for a vector with itself and zero against the zero vector", () => {
    const v = Float64Array.from([3, -1, 2]);
    expect(cosine(v, v)).toBeCloseTo(1.0, 12);
    expect(cosine(v, new Float64Array(3))).toBe(0);
  });
});
