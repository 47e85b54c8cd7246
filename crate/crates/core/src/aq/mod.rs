//! Argument quality: rescoring, length filtering, score bins, bin sampling
//! and annotation labels.

mod baseline;

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{count_dictionary_words, Dictionary, ParsedSentence};
use crate::error::{Error, Result};

pub use baseline::{train_baseline_aq_scorer, BaselineAqScorer, MIN_TRAINING_SENTENCES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AqConfig {
    pub zero_rule_min_dict_words: usize,
    pub min_tokens: usize,
    pub max_tokens: usize,
    pub bin_edges: Vec<f64>,
    /// Signed so that a negative value in a config file is caught by
    /// [`AqConfig::validate`] rather than by the parser.
    pub sample_per_bin: i64,
    pub high_aq_threshold: f64,
    pub rng_seed: u64,
}

impl Default for AqConfig {
    fn default() -> Self {
        AqConfig {
            zero_rule_min_dict_words: 4,
            min_tokens: 10,
            max_tokens: 40,
            bin_edges: vec![0.55, 0.65, 0.75, 0.85, 0.95, 1.0],
            sample_per_bin: 100,
            high_aq_threshold: 0.55,
            rng_seed: 0,
        }
    }
}

impl AqConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bin_edges.len() < 2 {
            return Err(Error::config("bin_edges needs at least two values"));
        }
        if self.bin_edges.iter().any(|e| !(0.0..=1.0).contains(e)) {
            return Err(Error::config("bin_edges must lie in [0, 1]"));
        }
        if self.bin_edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("bin_edges must be strictly ascending"));
        }
        if self.min_tokens >= self.max_tokens {
            return Err(Error::config("min_tokens must be below max_tokens"));
        }
        if self.sample_per_bin < 0 {
            return Err(Error::config("sample_per_bin must not be negative"));
        }
        if !(0.0..=1.0).contains(&self.high_aq_threshold) {
            return Err(Error::config("high_aq_threshold must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn n_bins(&self) -> usize {
        self.bin_edges.len() - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AqProvenance {
    ExternalFile,
    TrainedBaseline,
}

/// Source of raw argument-quality scores.
pub trait AqScorer {
    fn score(&self, s: &ParsedSentence) -> Result<f64>;
    fn provenance(&self) -> AqProvenance;
}

/// Scores read from `sentence_id,aq_score`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExternalAqScores {
    scores: HashMap<String, f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct AqScoreRecord {
    sentence_id: String,
    aq_score: f64,
}

impl ExternalAqScores {
    pub fn read<R: Read>(reader: R) -> Result<Self> {
        let mut scores = HashMap::new();
        for (i, rec) in csv::Reader::from_reader(reader).deserialize().enumerate() {
            let rec: AqScoreRecord = rec?;
            if !(0.0..=1.0).contains(&rec.aq_score) {
                return Err(Error::Record {
                    source_name: "aq scores".into(),
                    line: i + 2,
                    message: format!("aq_score {} outside [0, 1]", rec.aq_score),
                });
            }
            scores.insert(rec.sentence_id, rec.aq_score);
        }
        Ok(ExternalAqScores { scores })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read(std::fs::File::open(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.scores.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

impl AqScorer for ExternalAqScores {
    fn score(&self, s: &ParsedSentence) -> Result<f64> {
        self.get(&s.id)
            .or(s.aq_score)
            .ok_or_else(|| Error::input(format!("no AQ score for sentence {}", s.id)))
    }

    fn provenance(&self) -> AqProvenance {
        AqProvenance::ExternalFile
    }
}

pub fn write_aq_scores<W: Write>(writer: W, scores: &[(String, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for (id, s) in scores {
        w.serialize(AqScoreRecord {
            sentence_id: id.clone(),
            aq_score: *s,
        })?;
    }
    w.flush().map_err(|e| Error::io("<aq scores>", e))?;
    Ok(())
}

/// Zeroes the score of a sentence that has no verb and fewer than
/// `zero_rule_min_dict_words` dictionary words; otherwise returns it as is.
pub fn rescore_aq(s: &ParsedSentence, raw_score: f64, dict: &Dictionary, cfg: &AqConfig) -> Result<f64> {
    if !(0.0..=1.0).contains(&raw_score) {
        return Err(Error::input(format!(
            "AQ score {raw_score} for sentence {} is outside [0, 1]",
            s.id
        )));
    }
    if !s.has_verb() && count_dictionary_words(s, dict) < cfg.zero_rule_min_dict_words {
        Ok(0.0)
    } else {
        Ok(raw_score)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LengthPartition {
    pub kept: Vec<ParsedSentence>,
    pub dropped_short: Vec<ParsedSentence>,
    pub dropped_long: Vec<ParsedSentence>,
}

/// Keeps sentences with `min_tokens <= len <= max_tokens`.
pub fn filter_by_length(sentences: &[ParsedSentence], cfg: &AqConfig) -> LengthPartition {
    let mut out = LengthPartition::default();
    for s in sentences {
        let n = s.len();
        if n < cfg.min_tokens {
            out.dropped_short.push(s.clone());
        } else if n > cfg.max_tokens {
            out.dropped_long.push(s.clone());
        } else {
            out.kept.push(s.clone());
        }
    }
    out
}

/// Token-count histogram.
pub fn length_histogram(sentences: &[ParsedSentence]) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for s in sentences {
        *h.entry(s.len()).or_insert(0) += 1;
    }
    h
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreBin {
    pub low: f64,
    pub high: f64,
    /// Sentence ids with their scores, in input order.
    pub members: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Binning {
    pub bins: Vec<ScoreBin>,
    /// Scores below the first edge.
    pub discard: Vec<(String, f64)>,
}

/// Index of the bin holding `score`, or `None` for the discard pool. Bins
/// are `[edge_i, edge_{i+1})` with the last one closed.
pub fn bin_index(score: f64, edges: &[f64]) -> Option<usize> {
    let last = edges.len() - 1;
    if score < edges[0] || score > edges[last] {
        return None;
    }
    if score == edges[last] {
        return Some(last - 1);
    }
    (0..last).find(|&i| score >= edges[i] && score < edges[i + 1])
}

pub fn bin_by_score<S: AsRef<str>>(scored: &[(S, f64)], cfg: &AqConfig) -> Result<Binning> {
    cfg.validate()?;
    let mut bins: Vec<ScoreBin> = cfg
        .bin_edges
        .windows(2)
        .map(|w| ScoreBin {
            low: w[0],
            high: w[1],
            members: Vec::new(),
        })
        .collect();
    let mut discard = Vec::new();
    for (id, score) in scored {
        if !(0.0..=1.0).contains(score) {
            return Err(Error::input(format!(
                "AQ score {score} for {} outside [0, 1]",
                id.as_ref()
            )));
        }
        let item = (id.as_ref().to_string(), *score);
        match bin_index(*score, &cfg.bin_edges) {
            Some(i) => bins[i].members.push(item),
            // Scores above the top edge cannot occur with edges ending at 1.
            None => discard.push(item),
        }
    }
    Ok(Binning { bins, discard })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledSentence {
    pub bin: usize,
    pub sentence_id: String,
    pub aq_score: f64,
}

/// Up to `sample_per_bin` members drawn without replacement from each bin.
/// One ChaCha8 stream seeded with `rng_seed` is consumed bin by bin.
pub fn sample_bins(binning: &Binning, cfg: &AqConfig) -> Result<Vec<SampledSentence>> {
    if cfg.sample_per_bin < 0 {
        return Err(Error::config("sample_per_bin must not be negative"));
    }
    let k = cfg.sample_per_bin as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut out = Vec::new();
    for (b, bin) in binning.bins.iter().enumerate() {
        let mut idx: Vec<usize> = (0..bin.members.len()).collect();
        let take = k.min(idx.len());
        let (chosen, _) = idx.partial_shuffle(&mut rng, take);
        out.extend(chosen.iter().map(|&i| SampledSentence {
            bin: b,
            sentence_id: bin.members[i].0.clone(),
            aq_score: bin.members[i].1,
        }));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AqAnnotation {
    pub sentence_id: String,
    pub worker_id: String,
    pub score: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AqLabel {
    Yes,
    No,
}

/// 3 is an argument, 1 and 2 are not.
pub fn map_annotation_label(a: &AqAnnotation) -> Result<AqLabel> {
    match a.score {
        3 => Ok(AqLabel::Yes),
        1 | 2 => Ok(AqLabel::No),
        s => Err(Error::input(format!(
            "AQ annotation score {s} for sentence {} is not in 1..=3",
            a.sentence_id
        ))),
    }
}

/// Majority of mapped labels; ties go to `No`.
pub fn gold_label(annotations: &[AqAnnotation]) -> Result<AqLabel> {
    if annotations.is_empty() {
        return Err(Error::input("gold label needs at least one annotation"));
    }
    let mut yes = 0usize;
    for a in annotations {
        if map_annotation_label(a)? == AqLabel::Yes {
            yes += 1;
        }
    }
    Ok(if 2 * yes > annotations.len() {
        AqLabel::Yes
    } else {
        AqLabel::No
    })
}

/// Gold labels for every annotated sentence.
pub fn gold_labels(annotations: &[AqAnnotation]) -> Result<BTreeMap<String, AqLabel>> {
    let mut grouped: BTreeMap<&str, Vec<AqAnnotation>> = BTreeMap::new();
    for a in annotations {
        grouped.entry(a.sentence_id.as_str()).or_default().push(a.clone());
    }
    grouped
        .into_iter()
        .map(|(id, v)| Ok((id.to_string(), gold_label(&v)?)))
        .collect()
}

pub fn read_aq_annotations<R: Read>(reader: R) -> Result<Vec<AqAnnotation>> {
    let mut out = Vec::new();
    for rec in csv::Reader::from_reader(reader).deserialize() {
        let a: AqAnnotation = rec?;
        map_annotation_label(&a)?;
        out.push(a);
    }
    Ok(out)
}

pub fn write_aq_annotations<W: Write>(writer: W, annotations: &[AqAnnotation]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for a in annotations {
        w.serialize(a)?;
    }
    w.flush().map_err(|e| Error::io("<aq annotations>", e))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinQuality {
    pub low: f64,
    pub high: f64,
    pub n: usize,
    pub yes: usize,
    /// `None` for an empty bin.
    pub p_yes: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinQualityReport {
    pub bins: Vec<BinQuality>,
    /// Yes-rate over all binned sentences.
    pub global_yes_rate: Option<f64>,
    /// Share of labeled sentences where `score > threshold` agrees with a
    /// `Yes` gold label.
    pub agreement: Option<f64>,
    pub threshold: f64,
}

/// Per-bin probability that a sentence is judged an argument. Input items
/// are `(sentence id, rescored AQ, gold label)`.
pub fn bin_quality_report<S: AsRef<str>>(items: &[(S, f64, AqLabel)], cfg: &AqConfig) -> Result<BinQualityReport> {
    cfg.validate()?;
    let mut bins: Vec<BinQuality> = cfg
        .bin_edges
        .windows(2)
        .map(|w| BinQuality {
            low: w[0],
            high: w[1],
            n: 0,
            yes: 0,
            p_yes: None,
        })
        .collect();
    let mut agree = 0usize;
    for (id, score, label) in items {
        if !(0.0..=1.0).contains(score) {
            return Err(Error::input(format!(
                "AQ score {score} for {} outside [0, 1]",
                id.as_ref()
            )));
        }
        let yes = *label == AqLabel::Yes;
        if let Some(i) = bin_index(*score, &cfg.bin_edges) {
            bins[i].n += 1;
            bins[i].yes += usize::from(yes);
        }
        if (*score > cfg.high_aq_threshold) == yes {
            agree += 1;
        }
    }
    for b in &mut bins {
        b.p_yes = (b.n > 0).then(|| b.yes as f64 / b.n as f64);
    }
    let n_binned: usize = bins.iter().map(|b| b.n).sum();
    let yes_binned: usize = bins.iter().map(|b| b.yes).sum();
    Ok(BinQualityReport {
        global_yes_rate: (n_binned > 0).then(|| yes_binned as f64 / n_binned as f64),
        agreement: (!items.is_empty()).then(|| agree as f64 / items.len() as f64),
        threshold: cfg.high_aq_threshold,
        bins,
    })
}

impl BinQualityReport {
    /// CSV `bin_low,bin_high,n,p_yes`; an empty bin has an empty `p_yes`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["bin_low", "bin_high", "n", "p_yes"])?;
        for b in &self.bins {
            w.write_record([
                b.low.to_string(),
                b.high.to_string(),
                b.n.to_string(),
                b.p_yes.map(|p| p.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<bin report>", e))?;
        Ok(())
    }
}
