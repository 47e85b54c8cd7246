//! Candidate pair scoring and selection, AFS annotation aggregation and the
//! inter-annotator topline.

mod sts;

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::ParsedSentence;
use crate::error::{Error, Result};
use crate::ml::pearson_r;

pub use sts::{ExternalSts, ProxySts, StsScorer};

/// Highest value on the 0-5 facet similarity scale.
pub const AFS_MAX: u8 = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AfsAnnotation {
    pub pair_id: String,
    pub worker_id: String,
    pub score: u8,
}

impl AfsAnnotation {
    pub fn validate(&self) -> Result<()> {
        if self.score > AFS_MAX {
            return Err(Error::input(format!(
                "AFS score {} for pair {} is outside 0..=5",
                self.score, self.pair_id
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArgumentPair {
    pub pair_id: String,
    pub sent_a: String,
    pub sent_b: String,
    pub sts_prescore: f64,
    pub annotations: Vec<AfsAnnotation>,
    /// Mean annotator score; present iff there is at least one annotation.
    pub gold_afs: Option<f64>,
}

impl ArgumentPair {
    pub fn new(sent_a: impl Into<String>, sent_b: impl Into<String>, sts_prescore: f64) -> Self {
        let (sent_a, sent_b) = (sent_a.into(), sent_b.into());
        ArgumentPair {
            pair_id: pair_id_for(&sent_a, &sent_b),
            sent_a,
            sent_b,
            sts_prescore,
            annotations: Vec::new(),
            gold_afs: None,
        }
    }
}

pub fn pair_id_for(a: &str, b: &str) -> String {
    format!("{a}__{b}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PairSamplingConfig {
    pub target_pairs: usize,
    pub per_sentence_cap: usize,
    pub min_prescore: Option<f64>,
    pub rng_seed: u64,
}

impl Default for PairSamplingConfig {
    fn default() -> Self {
        PairSamplingConfig {
            target_pairs: 2000,
            per_sentence_cap: 10,
            min_prescore: None,
            rng_seed: 0,
        }
    }
}

impl PairSamplingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.target_pairs == 0 {
            return Err(Error::config("target_pairs must be positive"));
        }
        if self.per_sentence_cap == 0 {
            return Err(Error::config("per_sentence_cap must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairSelection {
    pub pairs: Vec<ArgumentPair>,
    /// Lowest prescore among accepted pairs.
    pub min_accepted_prescore: Option<f64>,
    /// Set when fewer than `target_pairs` could be accepted.
    pub shortfall: Option<String>,
}

/// Greedy selection of the highest-prescored pairs subject to a per-sentence
/// usage cap. Candidates are all unordered pairs with a score, ordered by
/// descending prescore and then by `(sent_a, sent_b)`; within a pair the
/// lexicographically smaller id is `sent_a`.
pub fn select_pairs(
    sentences: &[ParsedSentence],
    scorer: &(dyn StsScorer + Sync),
    cfg: &PairSamplingConfig,
) -> Result<PairSelection> {
    cfg.validate()?;
    if sentences.len() < 2 {
        return Err(Error::input("pair selection needs at least two sentences"));
    }
    let mut candidates: Vec<(f64, &str, &str)> = (0..sentences.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let a = &sentences[i];
            sentences[i + 1..].iter().filter_map(move |b| {
                if a.id == b.id {
                    return None;
                }
                let score = scorer.score(a, b)?;
                if !score.is_finite() {
                    return None;
                }
                let (x, y) = if a.id <= b.id { (a, b) } else { (b, a) };
                Some((score, x.id.as_str(), y.id.as_str()))
            })
        })
        .collect();
    if let Some(min) = cfg.min_prescore {
        candidates.retain(|c| c.0 >= min);
    }
    candidates.sort_by(|x, y| y.0.total_cmp(&x.0).then_with(|| (x.1, x.2).cmp(&(y.1, y.2))));

    let mut usage: HashMap<&str, usize> = HashMap::new();
    let mut pairs = Vec::new();
    for (score, a, b) in candidates {
        if pairs.len() >= cfg.target_pairs {
            break;
        }
        let ua = usage.get(a).copied().unwrap_or(0);
        let ub = usage.get(b).copied().unwrap_or(0);
        if ua >= cfg.per_sentence_cap || ub >= cfg.per_sentence_cap {
            continue;
        }
        *usage.entry(a).or_insert(0) += 1;
        *usage.entry(b).or_insert(0) += 1;
        pairs.push(ArgumentPair::new(a, b, score));
    }
    let min_accepted_prescore = pairs.last().map(|p| p.sts_prescore);
    let shortfall = (pairs.len() < cfg.target_pairs).then(|| {
        let msg = format!(
            "only {} of {} target pairs could be selected",
            pairs.len(),
            cfg.target_pairs
        );
        log::warn!("{msg}");
        msg
    });
    Ok(PairSelection {
        pairs,
        min_accepted_prescore,
        shortfall,
    })
}

/// Gold AFS: arithmetic mean of the annotator scores.
pub fn aggregate_gold(annotations: &[AfsAnnotation]) -> Result<f64> {
    if annotations.is_empty() {
        return Err(Error::input("cannot aggregate an empty annotation set"));
    }
    for a in annotations {
        a.validate()?;
    }
    Ok(annotations.iter().map(|a| f64::from(a.score)).sum::<f64>() / annotations.len() as f64)
}

/// Attaches annotations to their pairs and fills `gold_afs`. Annotations for
/// unknown pairs are an error.
pub fn attach_annotations(pairs: &mut [ArgumentPair], annotations: &[AfsAnnotation]) -> Result<()> {
    let index: HashMap<String, usize> = pairs.iter().enumerate().map(|(i, p)| (p.pair_id.clone(), i)).collect();
    for a in annotations {
        a.validate()?;
        let &i = index
            .get(&a.pair_id)
            .ok_or_else(|| Error::input(format!("annotation for unknown pair {}", a.pair_id)))?;
        pairs[i].annotations.push(a.clone());
    }
    for p in pairs.iter_mut() {
        p.gold_afs = if p.annotations.is_empty() {
            None
        } else {
            Some(aggregate_gold(&p.annotations)?)
        };
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerPairR {
    pub worker_a: String,
    pub worker_b: String,
    pub common_pairs: usize,
    /// `None` when the pair was excluded.
    pub r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToplineReport {
    /// Unweighted mean of the defined pairwise correlations.
    pub mean_r: f64,
    pub pairs: Vec<WorkerPairR>,
}

impl ToplineReport {
    pub fn excluded(&self) -> impl Iterator<Item = &WorkerPairR> {
        self.pairs.iter().filter(|p| p.r.is_none())
    }
}

/// Mean pairwise Pearson r between annotators over the pairs both scored.
/// Worker pairs with fewer than two shared items or zero variance are
/// excluded and listed with `r = None`.
pub fn human_topline(annotations: &[AfsAnnotation]) -> Result<ToplineReport> {
    let mut by_worker: BTreeMap<&str, BTreeMap<&str, f64>> = BTreeMap::new();
    for a in annotations {
        a.validate()?;
        by_worker
            .entry(a.worker_id.as_str())
            .or_default()
            .insert(a.pair_id.as_str(), f64::from(a.score));
    }
    if by_worker.len() < 2 {
        return Err(Error::input("human topline needs at least two workers"));
    }
    let workers: Vec<_> = by_worker.iter().collect();
    let mut pairs = Vec::new();
    for i in 0..workers.len() {
        for j in (i + 1)..workers.len() {
            let (wa, sa) = workers[i];
            let (wb, sb) = workers[j];
            let (xs, ys): (Vec<f64>, Vec<f64>) = sa.iter().filter_map(|(pid, x)| sb.get(pid).map(|y| (*x, *y))).unzip();
            let r = if xs.len() >= 2 {
                match pearson_r(&xs, &ys) {
                    Ok(r) => Some(r),
                    Err(Error::Undefined(_)) => None,
                    Err(e) => return Err(e),
                }
            } else {
                None
            };
            if r.is_none() {
                log::warn!("worker pair ({wa}, {wb}) excluded from topline");
            }
            pairs.push(WorkerPairR {
                worker_a: wa.to_string(),
                worker_b: wb.to_string(),
                common_pairs: xs.len(),
                r,
            });
        }
    }
    let defined: Vec<f64> = pairs.iter().filter_map(|p| p.r).collect();
    if defined.is_empty() {
        return Err(Error::undefined("no worker pair has a defined correlation"));
    }
    Ok(ToplineReport {
        mean_r: defined.iter().sum::<f64>() / defined.len() as f64,
        pairs,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct PairRecord {
    pair_id: String,
    sent_a: String,
    sent_b: String,
    sts_prescore: f64,
}

/// Pair file: `pair_id,sent_a,sent_b,sts_prescore`.
pub fn read_pairs<R: Read>(reader: R) -> Result<Vec<ArgumentPair>> {
    let mut out = Vec::new();
    for rec in csv::Reader::from_reader(reader).deserialize() {
        let rec: PairRecord = rec?;
        if rec.sent_a == rec.sent_b {
            return Err(Error::input(format!(
                "pair {} pairs a sentence with itself",
                rec.pair_id
            )));
        }
        out.push(ArgumentPair {
            pair_id: rec.pair_id,
            sent_a: rec.sent_a,
            sent_b: rec.sent_b,
            sts_prescore: rec.sts_prescore,
            annotations: Vec::new(),
            gold_afs: None,
        });
    }
    Ok(out)
}

pub fn write_pairs<W: Write>(writer: W, pairs: &[ArgumentPair]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for p in pairs {
        w.serialize(PairRecord {
            pair_id: p.pair_id.clone(),
            sent_a: p.sent_a.clone(),
            sent_b: p.sent_b.clone(),
            sts_prescore: p.sts_prescore,
        })?;
    }
    w.flush().map_err(|e| Error::io("<pairs>", e))?;
    Ok(())
}

/// AFS annotation file: `pair_id,worker_id,score`.
pub fn read_afs_annotations<R: Read>(reader: R) -> Result<Vec<AfsAnnotation>> {
    let mut out = Vec::new();
    for rec in csv::Reader::from_reader(reader).deserialize() {
        let a: AfsAnnotation = rec?;
        a.validate()?;
        out.push(a);
    }
    Ok(out)
}

pub fn write_afs_annotations<W: Write>(writer: W, annotations: &[AfsAnnotation]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for a in annotations {
        w.serialize(a)?;
    }
    w.flush().map_err(|e| Error::io("<annotations>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ann(pair: &str, worker: &str, score: u8) -> AfsAnnotation {
        AfsAnnotation {
            pair_id: pair.into(),
            worker_id: worker.into(),
            score,
        }
    }

    #[test]
    fn gold_is_mean() {
        let g = aggregate_gold(&[ann("p", "a", 4), ann("p", "b", 4), ann("p", "c", 5)]).unwrap();
        assert!((g - 13.0 / 3.0).abs() < 1e-15);
        assert_eq!(aggregate_gold(&[ann("p", "a", 0)]).unwrap(), 0.0);
        assert!(aggregate_gold(&[]).is_err());
        assert!(aggregate_gold(&[ann("p", "a", 6)]).is_err());
    }

    #[test]
    fn identical_workers_topline_one() {
        let scores = [1, 3, 4, 0, 5];
        let mut a = Vec::new();
        for (i, s) in scores.iter().enumerate() {
            a.push(ann(&format!("p{i}"), "w1", *s));
            a.push(ann(&format!("p{i}"), "w2", *s));
        }
        let t = human_topline(&a).unwrap();
        assert!((t.mean_r - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_worker_is_excluded() {
        let mut a = Vec::new();
        for i in 0..4 {
            a.push(ann(&format!("p{i}"), "w1", i as u8));
            a.push(ann(&format!("p{i}"), "w2", (i as u8 * 2) % 5));
            a.push(ann(&format!("p{i}"), "w3", 2));
        }
        let t = human_topline(&a).unwrap();
        assert_eq!(t.excluded().count(), 2);
        assert_eq!(t.pairs.len(), 3);
    }

    #[test]
    fn attach_sets_gold() {
        let mut pairs = vec![ArgumentPair::new("a", "b", 0.9), ArgumentPair::new("a", "c", 0.8)];
        attach_annotations(&mut pairs, &[ann("a__b", "w", 3), ann("a__b", "v", 4)]).unwrap();
        assert_eq!(pairs[0].gold_afs, Some(3.5));
        assert_eq!(pairs[1].gold_afs, None);
        assert!(attach_annotations(&mut pairs, &[ann("zz", "w", 1)]).is_err());
    }

    #[test]
    fn pair_csv_round_trip() {
        let pairs = vec![ArgumentPair::new("s1", "s2", 0.625)];
        let mut buf = Vec::new();
        write_pairs(&mut buf, &pairs).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "pair_id,sent_a,sent_b,sts_prescore\ns1__s2,s1,s2,0.625\n"
        );
        assert_eq!(read_pairs(&buf[..]).unwrap(), pairs);
    }
}
