//! ROUGE f-scores between two token sequences.
//!
//! Sequences are compared as reference and candidate; [`rouge_suite`]
//! scores both directions and averages them so the result is symmetric.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ngram::ngram_counts;
use crate::error::{Error, Result};

/// Begin-of-sentence marker used by ROUGE-SU.
const BOS: &str = "\u{0}<s>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RougeMetric {
    /// ROUGE-N with clipped n-gram counts.
    N(usize),
    /// Longest common subsequence.
    L,
    /// Weighted LCS, favouring consecutive matches.
    W,
    /// Skip-bigrams with unlimited gap.
    S,
    /// Skip-bigrams plus unigrams.
    SU,
}

impl RougeMetric {
    pub fn defaults() -> Vec<RougeMetric> {
        vec![
            RougeMetric::N(1),
            RougeMetric::N(2),
            RougeMetric::N(3),
            RougeMetric::N(4),
            RougeMetric::L,
            RougeMetric::W,
            RougeMetric::S,
            RougeMetric::SU,
        ]
    }

    /// Feature column name.
    pub fn column(&self) -> String {
        match self {
            RougeMetric::N(n) => format!("rouge_{n}"),
            RougeMetric::L => "rouge_l".into(),
            RougeMetric::W => "rouge_w".into(),
            RougeMetric::S => "rouge_s_star".into(),
            RougeMetric::SU => "rouge_su_star".into(),
        }
    }
}

impl fmt::Display for RougeMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RougeMetric::N(n) => write!(f, "N{n}"),
            RougeMetric::L => f.write_str("L"),
            RougeMetric::W => f.write_str("W"),
            RougeMetric::S => f.write_str("S*"),
            RougeMetric::SU => f.write_str("SU*"),
        }
    }
}

impl FromStr for RougeMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let up = s.trim().to_ascii_uppercase();
        match up.as_str() {
            "L" => Ok(RougeMetric::L),
            "W" => Ok(RougeMetric::W),
            "S*" | "S" => Ok(RougeMetric::S),
            "SU*" | "SU" => Ok(RougeMetric::SU),
            _ => match up.strip_prefix('N').and_then(|n| n.parse::<usize>().ok()) {
                Some(n) if n >= 1 => Ok(RougeMetric::N(n)),
                _ => Err(Error::config(format!("unknown ROUGE metric `{s}`"))),
            },
        }
    }
}

impl Serialize for RougeMetric {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for RougeMetric {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RougeConfig {
    pub metrics: Vec<RougeMetric>,
    pub beta: f64,
    /// Exponent of the ROUGE-W weighting function `f(k) = k^w`.
    pub w_weight: f64,
}

impl Default for RougeConfig {
    fn default() -> Self {
        RougeConfig {
            metrics: RougeMetric::defaults(),
            beta: 1.0,
            w_weight: 1.2,
        }
    }
}

impl RougeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) {
            return Err(Error::config("ROUGE beta must be positive"));
        }
        if !(self.w_weight >= 1.0) {
            return Err(Error::config("ROUGE-W weight must be at least 1"));
        }
        Ok(())
    }
}

pub fn f_score(precision: f64, recall: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    let denom = recall + b2 * precision;
    if denom == 0.0 {
        0.0
    } else {
        (1.0 + b2) * precision * recall / denom
    }
}

/// Precision, recall and F for one direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

impl RougeScore {
    const ZERO: RougeScore = RougeScore {
        precision: 0.0,
        recall: 0.0,
        f: 0.0,
    };

    fn new(precision: f64, recall: f64, beta: f64) -> Self {
        RougeScore {
            precision,
            recall,
            f: f_score(precision, recall, beta),
        }
    }
}

pub fn rouge_n(reference: &[String], candidate: &[String], n: usize, beta: f64) -> RougeScore {
    let r = ngram_counts(reference, n);
    let c = ngram_counts(candidate, n);
    if r.is_empty() || c.is_empty() {
        return RougeScore::ZERO;
    }
    let matched: usize = c.iter().map(|(g, &k)| k.min(*r.get(g).unwrap_or(&0))).sum();
    let ref_total = reference.len() + 1 - n;
    let cand_total = candidate.len() + 1 - n;
    RougeScore::new(
        matched as f64 / cand_total as f64,
        matched as f64 / ref_total as f64,
        beta,
    )
}

pub fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

pub fn rouge_l(reference: &[String], candidate: &[String], beta: f64) -> RougeScore {
    if reference.is_empty() || candidate.is_empty() {
        return RougeScore::ZERO;
    }
    let l = lcs_len(reference, candidate) as f64;
    RougeScore::new(l / candidate.len() as f64, l / reference.len() as f64, beta)
}

/// Maximum over common-subsequence alignments of the sum of `k^w` over
/// runs of `k` consecutive matches.
pub fn weighted_lcs(a: &[String], b: &[String], w: f64) -> f64 {
    let (m, n) = (a.len(), b.len());
    let mut best = vec![vec![0.0f64; n + 1]; m + 1];
    let mut run = vec![vec![0usize; n + 1]; m + 1];
    for i in 1..=m {
        for j in 1..=n {
            let mut v = best[i - 1][j].max(best[i][j - 1]);
            if a[i - 1] == b[j - 1] {
                run[i][j] = run[i - 1][j - 1] + 1;
                for k in 1..=run[i][j] {
                    v = v.max(best[i - k][j - k] + (k as f64).powf(w));
                }
            }
            best[i][j] = v;
        }
    }
    best[m][n]
}

pub fn rouge_w(reference: &[String], candidate: &[String], w: f64, beta: f64) -> RougeScore {
    if reference.is_empty() || candidate.is_empty() {
        return RougeScore::ZERO;
    }
    let score = weighted_lcs(reference, candidate, w);
    let inv = |x: f64| x.powf(1.0 / w);
    let recall = inv(score / (reference.len() as f64).powf(w));
    let precision = inv(score / (candidate.len() as f64).powf(w));
    RougeScore::new(precision.min(1.0), recall.min(1.0), beta)
}

fn skip_bigrams(tokens: &[&str]) -> HashMap<(String, String), usize> {
    let mut out = HashMap::new();
    for i in 0..tokens.len() {
        for j in (i + 1)..tokens.len() {
            *out.entry((tokens[i].to_string(), tokens[j].to_string())).or_insert(0) += 1;
        }
    }
    out
}

fn skip_bigram_score(reference: &[&str], candidate: &[&str], beta: f64) -> RougeScore {
    let (m, n) = (reference.len(), candidate.len());
    if m < 2 || n < 2 {
        return RougeScore::ZERO;
    }
    let r = skip_bigrams(reference);
    let c = skip_bigrams(candidate);
    let matched: usize = c.iter().map(|(g, &k)| k.min(*r.get(g).unwrap_or(&0))).sum();
    let pairs = |len: usize| (len * (len - 1) / 2) as f64;
    RougeScore::new(matched as f64 / pairs(n), matched as f64 / pairs(m), beta)
}

pub fn rouge_s(reference: &[String], candidate: &[String], beta: f64) -> RougeScore {
    let r: Vec<&str> = reference.iter().map(String::as_str).collect();
    let c: Vec<&str> = candidate.iter().map(String::as_str).collect();
    skip_bigram_score(&r, &c, beta)
}

/// ROUGE-S with a begin-of-sentence marker prepended to both sides, which
/// adds every unigram as a (marker, word) skip-bigram.
pub fn rouge_su(reference: &[String], candidate: &[String], beta: f64) -> RougeScore {
    if reference.is_empty() || candidate.is_empty() {
        return RougeScore::ZERO;
    }
    let r: Vec<&str> = std::iter::once(BOS)
        .chain(reference.iter().map(String::as_str))
        .collect();
    let c: Vec<&str> = std::iter::once(BOS)
        .chain(candidate.iter().map(String::as_str))
        .collect();
    skip_bigram_score(&r, &c, beta)
}

pub fn rouge_directional(
    reference: &[String],
    candidate: &[String],
    metric: RougeMetric,
    cfg: &RougeConfig,
) -> RougeScore {
    match metric {
        RougeMetric::N(n) => rouge_n(reference, candidate, n, cfg.beta),
        RougeMetric::L => rouge_l(reference, candidate, cfg.beta),
        RougeMetric::W => rouge_w(reference, candidate, cfg.w_weight, cfg.beta),
        RougeMetric::S => rouge_s(reference, candidate, cfg.beta),
        RougeMetric::SU => rouge_su(reference, candidate, cfg.beta),
    }
}

/// Symmetrized f-score of every configured metric, in config order.
pub fn rouge_suite(a: &[String], b: &[String], cfg: &RougeConfig) -> Vec<(RougeMetric, f64)> {
    cfg.metrics
        .iter()
        .map(|&m| {
            let ab = rouge_directional(a, b, m, cfg).f;
            let ba = rouge_directional(b, a, m, cfg).f;
            (m, 0.5 * (ab + ba))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn unigram_prefix_example() {
        let s = rouge_n(&toks("the cat sat"), &toks("the cat"), 1, 1.0);
        assert_eq!(s.precision, 1.0);
        assert!((s.recall - 2.0 / 3.0).abs() < 1e-15);
        assert!((s.f - 0.8).abs() < 1e-15);
    }

    #[test]
    fn identical_sentences_score_one() {
        let a = toks("capital punishment does not deter violent crime");
        for (m, v) in rouge_suite(&a, &a, &RougeConfig::default()) {
            assert!((v - 1.0).abs() < 1e-12, "{m}: {v}");
        }
    }

    #[test]
    fn short_sentences_zero_higher_orders() {
        let a = toks("guns kill");
        assert_eq!(rouge_n(&a, &a, 3, 1.0).f, 0.0);
        assert_eq!(rouge_s(&toks("guns"), &toks("guns"), 1.0).f, 0.0);
        assert_eq!(rouge_su(&toks("guns"), &toks("guns"), 1.0).f, 1.0);
    }

    #[test]
    fn skip_bigram_counts() {
        // ref "police killed the gunman", cand "police kill the gunman": Lin's example
        let r = toks("police killed the gunman");
        let c = toks("police kill the gunman");
        let s = rouge_s(&r, &c, 1.0);
        assert!((s.f - 3.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn wlcs_prefers_consecutive() {
        let a = toks("a b c d");
        let w = weighted_lcs(&a, &toks("a b x c d"), 2.0);
        assert_eq!(w, 8.0);
        assert_eq!(weighted_lcs(&a, &toks("a x b x c x d"), 2.0), 4.0);
    }

    #[test]
    fn metric_names_parse() {
        for m in RougeMetric::defaults() {
            assert_eq!(m.to_string().parse::<RougeMetric>().unwrap(), m);
        }
        assert!("N0".parse::<RougeMetric>().is_err());
        assert!("Q".parse::<RougeMetric>().is_err());
    }
}
