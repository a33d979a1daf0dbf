/**
 * Multinomial naive Bayes with absolute-discount smoothing.
 *
 * Per class y the token probability is
 *   p(w|y) = (max(c_y(w) - d, 0) + d * U_y / |V|) / N_y
 * with N_y the class token total, U_y the number of distinct tokens seen in
 * the class and V the joint vocabulary: the discount d taken from every seen
 * token is redistributed uniformly, so probabilities normalize exactly and
 * unseen tokens keep positive mass.
 */

import { tokenize } from "./tokenize.js";

export interface LabeledDoc {
  text: string;
  label: string;
}

export interface NBModel {
  labels: string[];
  discount: number;
  logPriors: Map<string, number>;
  /** Per label: seen-token log probability. */
  logProbs: Map<string, Map<string, number>>;
  /** Per label: log probability of any in-vocabulary token unseen in the class. */
  unseenLogProb: Map<string, number>;
  vocabulary: Set<string>;
}

export class NbError extends Error {}

export function trainNb(docs: LabeledDoc[], discount: number): NBModel {
  if (!(discount > 0 && discount < 1)) {
    throw new NbError(`discount must lie in (0, 1), got ${discount}`);
  }
  const labels = [...new Set(docs.map((d) => d.label))].sort();
  if (labels.length < 2) {
    throw new NbError("need at least two classes to train");
  }
  const vocabulary = new Set<string>();
  const counts = new Map<string, Map<string, number>>();
  const docCounts = new Map<string, number>();
  for (const label of labels) {
    counts.set(label, new Map());
    docCounts.set(label, 0);
  }
  for (const doc of docs) {
    const perClass = counts.get(doc.label)!;
    docCounts.set(doc.label, docCounts.get(doc.label)! + 1);
    for (const token of tokenize(doc.text)) {
      vocabulary.add(token);
      perClass.set(token, (perClass.get(token) ?? 0) + 1);
    }
  }
  if (vocabulary.size === 0) {
    throw new NbError("empty vocabulary: no tokens in the training corpus");
  }

  const logPriors = new Map<string, number>();
  const logProbs = new Map<string, Map<string, number>>();
  const unseenLogProb = new Map<string, number>();
  for (const label of labels) {
    logPriors.set(label, Math.log(docCounts.get(label)! / docs.length));
    const perClass = counts.get(label)!;
    let total = 0;
    for (const c of perClass.values()) total += c;
    const seen = perClass.size;
    if (total === 0) {
      throw new NbError(`class ${label} has no tokens`);
    }
    const uniform = (discount * seen) / vocabulary.size / total;
    const logs = new Map<string, number>();
    for (const [token, c] of perClass) {
      logs.set(token, Math.log(Math.max(c - discount, 0) / total + uniform));
    }
    logProbs.set(label, logs);
    unseenLogProb.set(label, Math.log(uniform));
  }
  return { labels, discount, logPriors, logProbs, unseenLogProb, vocabulary };
}

export interface Classification {
  label: string;
  /** Posterior probability of the returned label. */
  score: number;
  logJoint: Map<string, number>;
}

export function classify(model: NBModel, text: string): Classification {
  const tokens = tokenize(text).filter((t) => model.vocabulary.has(t));
  const logJoint = new Map<string, number>();
  for (const label of model.labels) {
    let lp = model.logPriors.get(label)!;
    const logs = model.logProbs.get(label)!;
    const unseen = model.unseenLogProb.get(label)!;
    for (const token of tokens) {
      lp += logs.get(token) ?? unseen;
    }
    logJoint.set(label, lp);
  }
  const values = [...logJoint.values()];
  const max = Math.max(...values);
  const z = values.reduce((acc, v) => acc + Math.exp(v - max), 0);
  let best = model.labels[0]!;
  for (const label of model.labels) {
    if (logJoint.get(label)! > logJoint.get(best)!) best = label;
  }
  return {
    label: best,
    score: Math.exp(logJoint.get(best)! - max) / z,
    logJoint,
  };
}

export interface Split<T> {
  train: T[];
  dev: T[];
  test: T[];
}

/** Deterministic 80/10/10 split via a seeded Fisher-Yates shuffle. */
export function splitDocs<T>(docs: T[], seed: number): Split<T> {
  const order = docs.map((_, i) => i);
  let state = seed >>> 0;
  const next = () => {
    // mulberry32
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
  for (let i = order.length - 1; i > 0; i--) {
    const j = Math.floor(next() * (i + 1));
    [order[i], order[j]] = [order[j]!, order[i]!];
  }
  const shuffled = order.map((i) => docs[i]!);
  const nDev = Math.floor(docs.length * 0.1);
  const nTest = Math.floor(docs.length * 0.1);
  return {
    dev: shuffled.slice(0, nDev),
    test: shuffled.slice(nDev, nDev + nTest),
    train: shuffled.slice(nDev + nTest),
  };
}

export function accuracy(model: NBModel, docs: LabeledDoc[]): number {
  if (docs.length === 0) throw new NbError("cannot score an empty partition");
  let hits = 0;
  for (const doc of docs) {
    if (classify(model, doc.text).label === doc.label) hits++;
  }
  return hits / docs.length;
}

const DISCOUNT_GRID = [0.1, 0.25, 0.5, 0.75, 0.9];

/** Pick the discount with the best dev accuracy (ties to the smaller d). */
export function tuneDiscount(
  train: LabeledDoc[],
  dev: LabeledDoc[],
  grid: number[] = DISCOUNT_GRID,
): { model: NBModel; discount: number; devAccuracy: number } {
  let best: { model: NBModel; discount: number; devAccuracy: number } | null = null;
  for (const d of grid) {
    const model = trainNb(train, d);
    const acc = accuracy(model, dev);
    if (best === null || acc > best.devAccuracy) {
      best = { model, discount: d, devAccuracy: acc };
    }
  }
  if (best === null) throw new NbError("empty discount grid");
  return best;
}
