use serde::{Deserialize, Serialize};

use super::embeddings::EmbeddingTable;
use crate::corpus::{is_punct_token, ParsedSentence, Stopwords};
use crate::error::{Error, Result};

/// Averaged word vector of a sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceEmbedding {
    pub vector: Vec<f64>,
    /// Number of tokens that contributed to the average.
    pub used: usize,
}

impl SentenceEmbedding {
    /// Set when no token survived filtering and the vector is all zeros.
    pub fn is_degenerate(&self) -> bool {
        self.used == 0
    }
}

/// Mean of the vectors of in-vocabulary tokens that are neither stopwords
/// nor punctuation.
pub fn sentence_embedding(s: &ParsedSentence, table: &EmbeddingTable, stopwords: &Stopwords) -> SentenceEmbedding {
    let mut sum = vec![0.0f64; table.dim()];
    let mut used = 0;
    for tok in &s.tokens {
        let w = tok.surface.as_str();
        if is_punct_token(w) || stopwords.contains(w) {
            continue;
        }
        if let Some(v) = table.lookup(w) {
            for (acc, x) in sum.iter_mut().zip(v) {
                *acc += f64::from(*x);
            }
            used += 1;
        }
    }
    if used > 0 {
        sum.iter_mut().for_each(|x| *x /= used as f64);
    }
    SentenceEmbedding { vector: sum, used }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingPairMode {
    Concat,
    Cosine,
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(-1.0, 1.0)
    }
}

/// `[a | b]` for [`EmbeddingPairMode::Concat`], `[cos(a, b)]` for cosine.
pub fn embedding_pair_features(
    a: &SentenceEmbedding,
    b: &SentenceEmbedding,
    mode: EmbeddingPairMode,
    expected_dim: Option<usize>,
) -> Result<Vec<f64>> {
    if a.vector.len() != b.vector.len() {
        return Err(Error::input("sentence embeddings differ in dimension"));
    }
    if let Some(d) = expected_dim {
        if d != a.vector.len() {
            return Err(Error::config(format!(
                "embedding table has dimension {}, config expects {d}",
                a.vector.len()
            )));
        }
    }
    Ok(match mode {
        EmbeddingPairMode::Concat => a.vector.iter().chain(&b.vector).copied().collect(),
        EmbeddingPairMode::Cosine => vec![cosine(&a.vector, &b.vector)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ParsedSentence;

    fn table() -> EmbeddingTable {
        let mut t = EmbeddingTable::new(2).unwrap();
        t.insert("guns", &[1.0, 2.0]).unwrap();
        t.insert("kill", &[3.0, -1.0]).unwrap();
        t.insert("the", &[100.0, 100.0]).unwrap();
        t
    }

    #[test]
    fn single_word_is_its_vector() {
        let s = ParsedSentence::from_raw("1", "t", "p", "guns");
        let e = sentence_embedding(&s, &table(), &Stopwords::bundled());
        assert_eq!(e.vector, vec![1.0, 2.0]);
        assert_eq!(e.used, 1);
    }

    #[test]
    fn skips_stopwords_oov_and_punct() {
        let mut s = ParsedSentence::from_raw("1", "t", "p", "The guns zzz kill");
        s.tokens.push(crate::corpus::Token::bare("!"));
        let e = sentence_embedding(&s, &table(), &Stopwords::bundled());
        assert_eq!(e.vector, vec![2.0, 0.5]);
    }

    #[test]
    fn all_filtered_is_flagged_zero() {
        let s = ParsedSentence::from_raw("1", "t", "p", "the of and");
        let e = sentence_embedding(&s, &table(), &Stopwords::bundled());
        assert!(e.is_degenerate());
        assert_eq!(e.vector, vec![0.0, 0.0]);
    }

    #[test]
    fn concat_and_cosine_modes() {
        let a = SentenceEmbedding {
            vector: vec![1.0, 0.0],
            used: 1,
        };
        let z = SentenceEmbedding {
            vector: vec![0.0, 0.0],
            used: 0,
        };
        assert_eq!(
            embedding_pair_features(&a, &z, EmbeddingPairMode::Concat, None).unwrap(),
            vec![1.0, 0.0, 0.0, 0.0]
        );
        assert_eq!(
            embedding_pair_features(&a, &a, EmbeddingPairMode::Cosine, None).unwrap(),
            vec![1.0]
        );
        assert_eq!(
            embedding_pair_features(&a, &z, EmbeddingPairMode::Cosine, None).unwrap(),
            vec![0.0]
        );
        assert!(embedding_pair_features(&a, &a, EmbeddingPairMode::Cosine, Some(3)).is_err());
    }
}
