/**
 * Tokenization, n-gram expansion and a heuristic noun-phrase chunker.
 *
 * The chunker is deliberately lexicon-based rather than model-based: a token
 * stream is split at function words, verbs and punctuation, and the remaining
 * maximal runs of content tokens are treated as noun-phrase chunks. The
 * chunker name is recorded in every artifact it influences so downstream
 * consumers know which heuristic produced the concept table.
 */

export const CHUNKER_NAME = "stopword-gap-heuristic-v1";

const FUNCTION_WORDS = new Set([
  "a", "an", "the", "this", "that", "these", "those",
  "i", "you", "he", "she", "it", "we", "they", "me", "him", "her", "us", "them",
  "my", "your", "his", "its", "our", "their", "mine", "yours",
  "of", "in", "on", "at", "by", "for", "with", "about", "against", "between",
  "into", "through", "during", "before", "after", "above", "below", "to",
  "from", "up", "down", "over", "under", "again", "further", "then", "once",
  "and", "but", "or", "nor", "so", "yet", "if", "because", "as", "until",
  "while", "when", "where", "why", "how", "what", "which", "who", "whom",
  "is", "am", "are", "was", "were", "be", "been", "being",
  "have", "has", "had", "having", "do", "does", "did", "doing",
  "will", "would", "shall", "should", "may", "might", "must", "can", "could",
  "not", "no", "only", "own", "same", "such", "than", "too", "very",
  "also", "just", "there", "here", "all", "any", "both", "each", "few",
  "more", "most", "other", "some",
]);

const COMMON_VERBS = new Set([
  "go", "goes", "went", "gone", "get", "gets", "got", "gotten",
  "make", "makes", "made", "say", "says", "said", "see", "sees", "saw", "seen",
  "know", "knows", "knew", "known", "think", "thinks", "thought",
  "take", "takes", "took", "taken", "come", "comes", "came",
  "want", "wants", "wanted", "use", "uses", "used",
  "find", "finds", "found", "give", "gives", "gave", "given",
  "tell", "tells", "told", "ask", "asks", "asked",
  "work", "works", "worked", "seem", "seems", "seemed",
  "feel", "feels", "felt", "try", "tries", "tried",
  "leave", "leaves", "left", "call", "calls", "called",
  "run", "runs", "ran", "jump", "jumps", "jumped",
  "vote", "votes", "voted", "argue", "argues", "argued",
  "believe", "believes", "believed", "support", "supports", "supported",
]);

// -ing/-ed forms that are ordinarily nouns in political text.
const NOMINAL_EXCEPTIONS = new Set([
  "building", "meeting", "funding", "spending", "housing", "wedding",
  "morning", "evening", "feeling", "hearing", "ruling", "warning",
]);

export function tokenize(text: string): string[] {
  return text
    .toLowerCase()
    .split(/[^a-z']+/)
    .map((t) => t.replace(/^'+|'+$/g, ""))
    .filter((t) => t.length > 0);
}

export function bigrams(tokens: string[]): string[] {
  const out: string[] = [];
  for (let i = 0; i + 1 < tokens.length; i++) {
    out.push(`${tokens[i]} ${tokens[i + 1]}`);
  }
  return out;
}

function looksLikeVerb(token: string): boolean {
  if (COMMON_VERBS.has(token)) return true;
  if (NOMINAL_EXCEPTIONS.has(token)) return false;
  return /(ing|ed)$/.test(token) && token.length > 5;
}

function isNounPhraseToken(token: string): boolean {
  return !FUNCTION_WORDS.has(token) && !looksLikeVerb(token);
}

/** Maximal runs of content tokens; the heuristic noun-phrase chunks. */
export function nounPhraseChunks(tokens: string[]): string[][] {
  const chunks: string[][] = [];
  let current: string[] = [];
  for (const token of tokens) {
    if (isNounPhraseToken(token)) {
      current.push(token);
    } else if (current.length > 0) {
      chunks.push(current);
      current = [];
    }
  }
  if (current.length > 0) chunks.push(current);
  return chunks;
}

/**
 * Does a term occur more often inside noun phrases than outside?
 *
 * For a unigram the occurrence is inside when its token is part of a chunk;
 * a bigram must appear as two adjacent tokens of the same chunk.
 */
export function appearsMostlyInNounPhrases(
  term: string,
  docsTokens: string[][],
): boolean {
  const parts = term.split(" ");
  let inside = 0;
  let total = 0;
  for (const tokens of docsTokens) {
    total += countOccurrences(parts, tokens);
    for (const chunk of nounPhraseChunks(tokens)) {
      inside += countOccurrences(parts, chunk);
    }
  }
  return total > 0 && inside * 2 > total;
}

function countOccurrences(parts: string[], tokens: string[]): number {
  let n = 0;
  for (let i = 0; i + parts.length <= tokens.length; i++) {
    let hit = true;
    for (let j = 0; j < parts.length; j++) {
      if (tokens[i + j] !== parts[j]) {
        hit = false;
        break;
      }
    }
    if (hit) n++;
  }
  return n;
}

export { countOccurrences };
