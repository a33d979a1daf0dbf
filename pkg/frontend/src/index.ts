export {
  CHUNKER_NAME,
  appearsMostlyInNounPhrases,
  bigrams,
  nounPhraseChunks,
  tokenize,
} from "./tokenize.js";
export {
  NbError,
  accuracy,
  classify,
  splitDocs,
  trainNb,
  tuneDiscount,
  type LabeledDoc,
  type NBModel,
} from "./nb.js";
export { MiError, miBits, selectConcepts, type ConceptTable } from "./mi.js";
export {
  SyntheticEmbeddingBackend,
  type EmbeddingExtractor,
} from "./embedding.js";
export {
  FOUNDATIONS,
  SubspaceError,
  buildSubspaces,
  cosine,
  firstPrincipalComponent,
  parseLexiconTsv,
  projectWord,
  type LexiconEntry,
  type MoralSubspace,
} from "./subspace.js";
export {
  FeatureError,
  PROJECTION_OCCURRENCE_CAP,
  projectConcepts,
  writeFeatureDir,
  type NodeCorpus,
  type ProjectionResult,
} from "./features.js";
export { CorpusError, filterPolitical, loadJsonl, loadNodeCorpus } from "./corpus.js";
