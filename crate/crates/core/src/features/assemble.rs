//! Feature assembly.
//!
//! Flattened column order is fixed regardless of the order groups are listed
//! in the config:
//! `ngram_cosine, rouge_* (config order), liwc_dep_overlap, sts, w2v_cosine,
//! w2v_a_0..w2v_a_{d-1}, w2v_b_0..w2v_b_{d-1}`.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dependency::{dep_overlap, LexicalizedSide, OverlapNorm};
use super::embeddings::EmbeddingTable;
use super::lexicon::CategoryLexicon;
use super::ngram::ngram_cosine;
use super::rouge::{rouge_suite, RougeConfig, RougeMetric};
use super::vectors::{embedding_pair_features, sentence_embedding, EmbeddingPairMode};
use crate::corpus::{ParsedSentence, Stopwords};
use crate::error::{Error, Result};
use crate::pairing::{ArgumentPair, StsScorer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureGroup {
    NgramCosine,
    Rouge,
    LiwcDepOverlap,
    Sts,
    W2vCosine,
    W2vConcat,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 6] = [
        FeatureGroup::NgramCosine,
        FeatureGroup::Rouge,
        FeatureGroup::LiwcDepOverlap,
        FeatureGroup::Sts,
        FeatureGroup::W2vCosine,
        FeatureGroup::W2vConcat,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureGroup::NgramCosine => "ngram_cosine",
            FeatureGroup::Rouge => "rouge",
            FeatureGroup::LiwcDepOverlap => "liwc_dep_overlap",
            FeatureGroup::Sts => "sts",
            FeatureGroup::W2vCosine => "w2v_cosine",
            FeatureGroup::W2vConcat => "w2v_concat",
        }
    }

    /// Group that produced a flattened column.
    pub fn of_column(column: &str) -> Option<FeatureGroup> {
        match column {
            "ngram_cosine" => Some(FeatureGroup::NgramCosine),
            "liwc_dep_overlap" => Some(FeatureGroup::LiwcDepOverlap),
            "sts" => Some(FeatureGroup::Sts),
            "w2v_cosine" => Some(FeatureGroup::W2vCosine),
            c if c.starts_with("rouge_") => Some(FeatureGroup::Rouge),
            c if c.starts_with("w2v_a_") || c.starts_with("w2v_b_") => Some(FeatureGroup::W2vConcat),
            _ => None,
        }
    }
}

impl fmt::Display for FeatureGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureGroup::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::config(format!("unknown feature group '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub groups: Vec<FeatureGroup>,
    pub ngram_max_order: usize,
    pub rouge: RougeConfig,
    pub lexicalized_side: LexicalizedSide,
    pub overlap_norm: OverlapNorm,
    /// Expected embedding dimension; `None` accepts the table's.
    pub embedding_dim: Option<usize>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            groups: vec![
                FeatureGroup::NgramCosine,
                FeatureGroup::Rouge,
                FeatureGroup::LiwcDepOverlap,
                FeatureGroup::Sts,
                FeatureGroup::W2vConcat,
            ],
            ngram_max_order: 3,
            rouge: RougeConfig::default(),
            lexicalized_side: LexicalizedSide::Governor,
            overlap_norm: OverlapNorm::SumOfLengths,
            embedding_dim: None,
        }
    }
}

impl FeatureConfig {
    pub fn only(groups: &[FeatureGroup]) -> Self {
        FeatureConfig {
            groups: groups.to_vec(),
            ..FeatureConfig::default()
        }
    }

    pub fn has(&self, g: FeatureGroup) -> bool {
        self.groups.contains(&g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.groups.is_empty() {
            return Err(Error::config("at least one feature group must be enabled"));
        }
        if self.ngram_max_order == 0 {
            return Err(Error::config("ngram_max_order must be at least 1"));
        }
        if self.has(FeatureGroup::Rouge) && self.rouge.metrics.is_empty() {
            return Err(Error::config("rouge group enabled with no metrics"));
        }
        self.rouge.validate()
    }

    /// Flattened column names for an embedding table of dimension `dim`.
    pub fn columns(&self, dim: usize) -> Vec<String> {
        let mut cols = Vec::new();
        if self.has(FeatureGroup::NgramCosine) {
            cols.push("ngram_cosine".to_string());
        }
        if self.has(FeatureGroup::Rouge) {
            cols.extend(self.rouge.metrics.iter().map(RougeMetric::column));
        }
        if self.has(FeatureGroup::LiwcDepOverlap) {
            cols.push("liwc_dep_overlap".to_string());
        }
        if self.has(FeatureGroup::Sts) {
            cols.push("sts".to_string());
        }
        if self.has(FeatureGroup::W2vCosine) {
            cols.push("w2v_cosine".to_string());
        }
        if self.has(FeatureGroup::W2vConcat) {
            cols.extend((0..dim).map(|i| format!("w2v_a_{i}")));
            cols.extend((0..dim).map(|i| format!("w2v_b_{i}")));
        }
        cols
    }
}

/// Shared read-only inputs for feature computation.
#[derive(Clone, Copy)]
pub struct FeatureResources<'a> {
    pub lexicon: Option<&'a CategoryLexicon>,
    pub embeddings: Option<&'a EmbeddingTable>,
    pub stopwords: &'a Stopwords,
    pub sts: Option<&'a (dyn StsScorer + Sync)>,
}

impl<'a> FeatureResources<'a> {
    pub fn new(stopwords: &'a Stopwords) -> Self {
        FeatureResources {
            lexicon: None,
            embeddings: None,
            stopwords,
            sts: None,
        }
    }

    fn check(&self, cfg: &FeatureConfig) -> Result<()> {
        if cfg.has(FeatureGroup::LiwcDepOverlap) && self.lexicon.is_none() {
            return Err(Error::MissingResource("category lexicon (liwc_dep_overlap)".into()));
        }
        if (cfg.has(FeatureGroup::W2vCosine) || cfg.has(FeatureGroup::W2vConcat)) && self.embeddings.is_none() {
            return Err(Error::MissingResource("embedding table (w2v features)".into()));
        }
        if cfg.has(FeatureGroup::Sts) && self.sts.is_none() {
            return Err(Error::MissingResource("STS scorer (sts)".into()));
        }
        if let (Some(d), Some(t)) = (cfg.embedding_dim, self.embeddings) {
            if d != t.dim() {
                return Err(Error::config(format!(
                    "embedding table has dimension {}, config expects {d}",
                    t.dim()
                )));
            }
        }
        Ok(())
    }

    fn dim(&self) -> usize {
        self.embeddings.map_or(0, EmbeddingTable::dim)
    }
}

/// Feature values of one pair, by group.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureVector {
    pub pair_id: String,
    pub ngram_cosine: Option<f64>,
    pub rouge: Vec<(RougeMetric, f64)>,
    pub liwc_dep_overlap: Option<f64>,
    pub sts: Option<f64>,
    pub w2v_cosine: Option<f64>,
    pub w2v_concat: Option<Vec<f64>>,
}

impl FeatureVector {
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        out.extend(self.ngram_cosine);
        out.extend(self.rouge.iter().map(|(_, v)| *v));
        out.extend(self.liwc_dep_overlap);
        out.extend(self.sts);
        out.extend(self.w2v_cosine);
        if let Some(v) = &self.w2v_concat {
            out.extend_from_slice(v);
        }
        out
    }
}

pub fn assemble_features(
    pair: &ArgumentPair,
    a: &ParsedSentence,
    b: &ParsedSentence,
    cfg: &FeatureConfig,
    res: &FeatureResources<'_>,
) -> Result<FeatureVector> {
    cfg.validate()?;
    res.check(cfg)?;
    assemble_checked(pair, a, b, cfg, res)
}

fn assemble_checked(
    pair: &ArgumentPair,
    a: &ParsedSentence,
    b: &ParsedSentence,
    cfg: &FeatureConfig,
    res: &FeatureResources<'_>,
) -> Result<FeatureVector> {
    let mut fv = FeatureVector {
        pair_id: pair.pair_id.clone(),
        ..FeatureVector::default()
    };
    let (la, lb) = (a.lower_surfaces(), b.lower_surfaces());
    if cfg.has(FeatureGroup::NgramCosine) {
        fv.ngram_cosine = Some(ngram_cosine(&la, &lb, cfg.ngram_max_order));
    }
    if cfg.has(FeatureGroup::Rouge) {
        fv.rouge = rouge_suite(&la, &lb, &cfg.rouge);
    }
    if cfg.has(FeatureGroup::LiwcDepOverlap) {
        let lex = res.lexicon.expect("checked");
        fv.liwc_dep_overlap = Some(dep_overlap(a, b, lex, cfg.lexicalized_side, cfg.overlap_norm)?);
    }
    if cfg.has(FeatureGroup::Sts) {
        let sts = res.sts.expect("checked");
        let v = sts
            .score(a, b)
            .ok_or_else(|| Error::input(format!("no STS score for pair {}", pair.pair_id)))?;
        fv.sts = Some(v / sts.scale_max());
    }
    if cfg.has(FeatureGroup::W2vCosine) || cfg.has(FeatureGroup::W2vConcat) {
        let table = res.embeddings.expect("checked");
        let ea = sentence_embedding(a, table, res.stopwords);
        let eb = sentence_embedding(b, table, res.stopwords);
        if cfg.has(FeatureGroup::W2vCosine) {
            fv.w2v_cosine = Some(embedding_pair_features(&ea, &eb, EmbeddingPairMode::Cosine, cfg.embedding_dim)?[0]);
        }
        if cfg.has(FeatureGroup::W2vConcat) {
            fv.w2v_concat = Some(embedding_pair_features(
                &ea,
                &eb,
                EmbeddingPairMode::Concat,
                cfg.embedding_dim,
            )?);
        }
    }
    if let Some(bad) = fv.flatten().iter().position(|v| !v.is_finite()) {
        return Err(Error::Internal(format!(
            "non-finite feature value at column {bad} for pair {}",
            pair.pair_id
        )));
    }
    Ok(fv)
}

/// Feature rows for a list of pairs, with gold scores when known.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub columns: Vec<String>,
    pub pair_ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub gold: Vec<Option<f64>>,
}

impl FeatureMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Gold targets; errors if any row lacks one.
    pub fn targets(&self) -> Result<Vec<f64>> {
        self.gold
            .iter()
            .zip(&self.pair_ids)
            .map(|(g, id)| g.ok_or_else(|| Error::input(format!("pair {id} has no gold AFS"))))
            .collect()
    }

    /// Columns belonging to the given groups, in the original order.
    pub fn select_groups(&self, groups: &[FeatureGroup]) -> Result<FeatureMatrix> {
        let keep: Vec<usize> = self
            .columns
            .iter()
            .enumerate()
            .filter(|(_, c)| FeatureGroup::of_column(c).is_some_and(|g| groups.contains(&g)))
            .map(|(i, _)| i)
            .collect();
        if keep.is_empty() {
            let names: Vec<_> = groups.iter().map(|g| g.name()).collect();
            return Err(Error::config(format!(
                "feature matrix has no columns for groups [{}]",
                names.join(", ")
            )));
        }
        Ok(FeatureMatrix {
            columns: keep.iter().map(|&i| self.columns[i].clone()).collect(),
            pair_ids: self.pair_ids.clone(),
            rows: self.rows.iter().map(|r| keep.iter().map(|&i| r[i]).collect()).collect(),
            gold: self.gold.clone(),
        })
    }

    /// The named columns, in the order given.
    pub fn select_columns<S: AsRef<str>>(&self, names: &[S]) -> Result<FeatureMatrix> {
        let pos: HashMap<&str, usize> = self.columns.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
        let keep = names
            .iter()
            .map(|n| {
                pos.get(n.as_ref())
                    .copied()
                    .ok_or_else(|| Error::input(format!("feature matrix has no column '{}'", n.as_ref())))
            })
            .collect::<Result<Vec<usize>>>()?;
        Ok(FeatureMatrix {
            columns: keep.iter().map(|&i| self.columns[i].clone()).collect(),
            pair_ids: self.pair_ids.clone(),
            rows: self.rows.iter().map(|r| keep.iter().map(|&i| r[i]).collect()).collect(),
            gold: self.gold.clone(),
        })
    }

    /// Rows whose pair id is in `ids`, in this matrix's order.
    pub fn subset(&self, ids: &std::collections::HashSet<&str>) -> FeatureMatrix {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| ids.contains(self.pair_ids[i].as_str()))
            .collect();
        FeatureMatrix {
            columns: self.columns.clone(),
            pair_ids: keep.iter().map(|&i| self.pair_ids[i].clone()).collect(),
            rows: keep.iter().map(|&i| self.rows[i].clone()).collect(),
            gold: keep.iter().map(|&i| self.gold[i]).collect(),
        }
    }

    /// CSV with header `pair_id,gold_afs,<columns>`; missing gold is empty.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["pair_id".to_string(), "gold_afs".to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header)?;
        for ((id, row), gold) in self.pair_ids.iter().zip(&self.rows).zip(&self.gold) {
            let mut rec = Vec::with_capacity(row.len() + 2);
            rec.push(id.clone());
            rec.push(gold.map(|g| g.to_string()).unwrap_or_default());
            rec.extend(row.iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<features>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.clone();
        if header.len() < 3 || &header[0] != "pair_id" || &header[1] != "gold_afs" {
            return Err(Error::input(
                "feature CSV must start with pair_id,gold_afs and name at least one column",
            ));
        }
        let columns: Vec<String> = header.iter().skip(2).map(str::to_string).collect();
        if let Some(c) = columns.iter().find(|c| FeatureGroup::of_column(c).is_none()) {
            return Err(Error::input(format!("unknown feature column '{c}'")));
        }
        let mut m = FeatureMatrix {
            columns,
            pair_ids: Vec::new(),
            rows: Vec::new(),
            gold: Vec::new(),
        };
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            let bad = |msg: String| Error::Record {
                source_name: "features".into(),
                line,
                message: msg,
            };
            let num = |s: &str| -> Result<f64> {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| bad(format!("'{s}' is not a finite number")))
            };
            m.pair_ids.push(rec[0].to_string());
            m.gold.push(if rec[1].is_empty() { None } else { Some(num(&rec[1])?) });
            m.rows.push(rec.iter().skip(2).map(num).collect::<Result<_>>()?);
        }
        Ok(m)
    }
}

/// Features for every pair, computed in parallel; row order follows `pairs`.
pub fn featurize_pairs(
    pairs: &[ArgumentPair],
    sentences: &[ParsedSentence],
    cfg: &FeatureConfig,
    res: &FeatureResources<'_>,
) -> Result<FeatureMatrix> {
    cfg.validate()?;
    res.check(cfg)?;
    let index: HashMap<&str, &ParsedSentence> = sentences.iter().map(|s| (s.id.as_str(), s)).collect();
    let lookup = |id: &str| {
        index
            .get(id)
            .copied()
            .ok_or_else(|| Error::input(format!("pair references unknown sentence '{id}'")))
    };
    let rows = pairs
        .par_iter()
        .map(|p| {
            let fv = assemble_checked(p, lookup(&p.sent_a)?, lookup(&p.sent_b)?, cfg, res)?;
            Ok(fv.flatten())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FeatureMatrix {
        columns: cfg.columns(res.dim()),
        pair_ids: pairs.iter().map(|p| p.pair_id.clone()).collect(),
        rows,
        gold: pairs.iter().map(|p| p.gold_afs).collect(),
    })
}
