//! Pair similarity features and the assembled feature matrix.

mod assemble;
mod dependency;
mod embeddings;
mod lexicon;
mod ngram;
mod rouge;
mod vectors;

pub use assemble::{
    assemble_features, featurize_pairs, FeatureConfig, FeatureGroup, FeatureMatrix, FeatureResources, FeatureVector,
};
pub use dependency::{dep_category_tuples, dep_overlap, multiset_intersection, DepTuple, LexicalizedSide, OverlapNorm};
pub use embeddings::EmbeddingTable;
pub use lexicon::{Category, CategoryId, CategoryLexicon};
pub use ngram::ngram_cosine;
pub use rouge::{
    f_score, lcs_len, rouge_directional, rouge_l, rouge_n, rouge_s, rouge_su, rouge_suite, rouge_w, weighted_lcs,
    RougeConfig, RougeMetric, RougeScore,
};
pub use vectors::{cosine, embedding_pair_features, sentence_embedding, EmbeddingPairMode, SentenceEmbedding};
