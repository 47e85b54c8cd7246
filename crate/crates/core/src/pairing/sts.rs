use std::collections::{BTreeMap, HashMap};
use std::io::Read;
use std::path::Path;

use serde::Deserialize;

use crate::corpus::{is_punct_token, ParsedSentence, Stopwords};
use crate::error::{Error, Result};

/// Pluggable semantic-similarity prescorer.
pub trait StsScorer {
    /// Similarity of two sentences, or `None` if the scorer has no value for
    /// the pair. Must be symmetric.
    fn score(&self, a: &ParsedSentence, b: &ParsedSentence) -> Option<f64>;

    /// Maximum of the score scale; `score(a, a)` should equal it.
    fn scale_max(&self) -> f64 {
        1.0
    }

    fn provenance(&self) -> &'static str;
}

/// Lexical tf-idf cosine over lowercased lemmas with stopwords removed.
///
/// idf(t) = ln((1 + N) / (1 + df(t))) + 1, with N and df taken from the
/// sentences passed to [`ProxySts::fit`].
#[derive(Debug, Clone)]
pub struct ProxySts {
    idf: HashMap<String, f64>,
    unseen_idf: f64,
    stopwords: Stopwords,
}

impl ProxySts {
    pub fn fit(sentences: &[ParsedSentence], stopwords: Stopwords) -> Self {
        let n = sentences.len() as f64;
        let mut df: HashMap<String, usize> = HashMap::new();
        for s in sentences {
            let mut terms = Self::terms_with(s, &stopwords);
            terms.sort();
            terms.dedup();
            for t in terms {
                *df.entry(t).or_insert(0) += 1;
            }
        }
        let idf = df
            .into_iter()
            .map(|(t, d)| (t, ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0))
            .collect();
        ProxySts {
            idf,
            unseen_idf: (1.0 + n).ln() + 1.0,
            stopwords,
        }
    }

    fn terms_with(s: &ParsedSentence, stopwords: &Stopwords) -> Vec<String> {
        s.tokens
            .iter()
            .map(|t| {
                let l = if t.lemma.is_empty() || t.lemma == "_" {
                    &t.surface
                } else {
                    &t.lemma
                };
                l.to_lowercase()
            })
            .filter(|l| !is_punct_token(l) && !stopwords.contains(l))
            .collect()
    }

    pub fn terms(&self, s: &ParsedSentence) -> Vec<String> {
        Self::terms_with(s, &self.stopwords)
    }

    pub fn idf(&self, term: &str) -> f64 {
        self.idf.get(term).copied().unwrap_or(self.unseen_idf)
    }

    fn weights(&self, s: &ParsedSentence) -> BTreeMap<String, f64> {
        let mut tf: BTreeMap<String, f64> = BTreeMap::new();
        for t in self.terms(s) {
            *tf.entry(t).or_insert(0.0) += 1.0;
        }
        for (t, w) in tf.iter_mut() {
            *w *= self.idf(t);
        }
        tf
    }

    /// Score plus a flag that is set when either side has no content terms.
    pub fn score_flagged(&self, a: &ParsedSentence, b: &ParsedSentence) -> (f64, bool) {
        let wa = self.weights(a);
        let wb = self.weights(b);
        if wa.is_empty() || wb.is_empty() {
            return (0.0, true);
        }
        let dot: f64 = wa.iter().filter_map(|(t, x)| wb.get(t).map(|y| x * y)).sum();
        let norm = |m: &BTreeMap<String, f64>| m.values().map(|x| x * x).sum::<f64>().sqrt();
        ((dot / (norm(&wa) * norm(&wb))).clamp(0.0, 1.0), false)
    }
}

impl StsScorer for ProxySts {
    fn score(&self, a: &ParsedSentence, b: &ParsedSentence) -> Option<f64> {
        Some(self.score_flagged(a, b).0)
    }

    fn provenance(&self) -> &'static str {
        "proxy-tfidf"
    }
}

/// Precomputed scores read from `sent_a,sent_b,score,scale_max`. Values are
/// kept on their original scale.
#[derive(Debug, Clone, Default)]
pub struct ExternalSts {
    scores: HashMap<(String, String), f64>,
    scale_max: f64,
}

#[derive(Deserialize)]
struct ExternalRecord {
    sent_a: String,
    sent_b: String,
    score: f64,
    scale_max: f64,
}

fn key(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

impl ExternalSts {
    pub fn read<R: Read>(reader: R) -> Result<Self> {
        let mut out = ExternalSts::default();
        let mut scale: Option<f64> = None;
        for (i, rec) in csv::Reader::from_reader(reader).deserialize().enumerate() {
            let rec: ExternalRecord = rec?;
            let line = i + 2;
            if !rec.score.is_finite() || !rec.scale_max.is_finite() || rec.scale_max <= 0.0 {
                return Err(Error::Record {
                    source_name: "sts".into(),
                    line,
                    message: "score and scale_max must be finite, scale_max positive".into(),
                });
            }
            match scale {
                Some(s) if s != rec.scale_max => {
                    return Err(Error::Record {
                        source_name: "sts".into(),
                        line,
                        message: format!("scale_max {} differs from earlier {s}", rec.scale_max),
                    })
                }
                _ => scale = Some(rec.scale_max),
            }
            let k = key(&rec.sent_a, &rec.sent_b);
            if let Some(prev) = out.scores.insert(k, rec.score) {
                if prev != rec.score {
                    return Err(Error::Record {
                        source_name: "sts".into(),
                        line,
                        message: format!("conflicting scores for ({}, {})", rec.sent_a, rec.sent_b),
                    });
                }
            }
        }
        out.scale_max = scale.unwrap_or(1.0);
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(f)
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        self.scores.get(&key(a, b)).copied()
    }
}

impl StsScorer for ExternalSts {
    fn score(&self, a: &ParsedSentence, b: &ParsedSentence) -> Option<f64> {
        if a.id == b.id {
            return Some(self.scale_max);
        }
        self.get(&a.id, &b.id)
    }

    fn scale_max(&self) -> f64 {
        self.scale_max
    }

    fn provenance(&self) -> &'static str {
        "external-file"
    }
}
